def foo(low, high):
    total = 0
    for value in range(low, high + 1):
        total += value
    return total
