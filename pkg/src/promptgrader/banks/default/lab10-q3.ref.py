def foo(text):
    for ch in text.lower():
        if ch in 'aeiou':
            return True
    return False
