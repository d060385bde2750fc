def foo(queens):
    for first in range(len(queens)):
        for second in range(first + 1, len(queens)):
            row_a, col_a = queens[first]
            row_b, col_b = queens[second]
            if row_a == row_b or col_a == col_b:
                return False
            if abs(row_a - row_b) == abs(col_a - col_b):
                return False
    return True
