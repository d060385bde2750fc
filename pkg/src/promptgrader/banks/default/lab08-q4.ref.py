def foo(values):
    total = 0
    for value in values:
        if value > 0:
            total += value
    return total
