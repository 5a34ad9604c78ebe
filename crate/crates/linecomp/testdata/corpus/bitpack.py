MASK_LOW = 15
MASK_HIGH = 240

def pack_pair(high, low):
    value = (high << 4) | (low & MASK_LOW)
    return value & 255

def unpack_pair(value):
    high = (value & MASK_HIGH) >> 4
    low = value & MASK_LOW
    return high, low

def toggle_bits(value, mask):
    value ^= mask
    return value

def set_flags(state, flags):
    state |= flags
    state &= 255
    return state

def parity(value):
    bits = 0
    while value:
        bits += value & 1
        value >>= 1
    return bits % 2

def invert_byte(value):
    return ~value & 255

def scale_up(value, shift):
    value <<= shift
    return value
