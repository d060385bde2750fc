def foo(a):
    b = ''
    for c in a:
        b = c + b
    return b
