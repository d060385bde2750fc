def foo(a, b):
    c = 0
    for d in range(a, b + 1):
        c += d
    return c
