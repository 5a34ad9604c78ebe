import time

class GaveUp(Exception):
    pass

def with_retries(action, attempts=3, delay=0.1):
    last_error = None
    tried = 0
    while tried < attempts:
        tried += 1
        try:
            return action()
        except RuntimeError as err:
            last_error = err
            time.sleep(delay)
            delay *= 2.0
    raise GaveUp(str(last_error))

def safe_ratio(num, den):
    try:
        return num / den
    except ZeroDivisionError:
        return 0.0

def check_positive(value):
    assert value > 0, "value must be positive"
    return value

def parse_int(text, fallback=0):
    try:
        return int(text)
    except ValueError:
        pass
    return fallback
