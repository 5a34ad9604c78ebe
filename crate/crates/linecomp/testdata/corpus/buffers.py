import collections

class RingBuffer:
    def __init__(self, capacity):
        self.capacity = capacity
        self.items = []
        self.start = 0

    def push(self, value):
        if len(self.items) < self.capacity:
            self.items.append(value)
        else:
            self.items[self.start] = value
            self.start = (self.start + 1) % self.capacity

    def drain(self):
        ordered = self.items[self.start:] + self.items[:self.start]
        self.items = []
        self.start = 0
        return ordered

def refill(buffer, values):
    for value in values:
        buffer.push(value)
    return buffer
