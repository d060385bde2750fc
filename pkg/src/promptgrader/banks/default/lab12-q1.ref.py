def foo(queens):
    (row_a, col_a), (row_b, col_b) = queens
    if row_a == row_b or col_a == col_b:
        return True
    return abs(row_a - row_b) == abs(col_a - col_b)
