def foo(a, b):
    c = 0
    for d in a[b]:
        c += d
    return c
