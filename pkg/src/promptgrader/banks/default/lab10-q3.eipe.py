def foo(a):
    for b in a.lower():
        if b in 'aeiou':
            return True
    return False
