def foo(text):
    flipped = ''
    for ch in text:
        flipped = ch + flipped
    return flipped
