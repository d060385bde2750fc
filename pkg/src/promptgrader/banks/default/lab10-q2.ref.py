def foo(grid, row):
    total = 0
    for value in grid[row]:
        total += value
    return total
