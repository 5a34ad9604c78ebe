from operator import add, mul
from operator import sub as minus

OPS = {"+": add, "-": minus, "*": mul}

class Machine:
    def __init__(self):
        self.stack = []

    def push(self, value):
        self.stack.append(value)

    def pop(self):
        if not self.stack:
            raise IndexError("stack underflow")
        return self.stack.pop()

    def apply(self, symbol):
        if symbol not in OPS:
            raise KeyError(symbol)
        right = self.pop()
        left = self.pop()
        op = OPS[symbol]
        self.push(op(left, right))

def run(program):
    machine = Machine()
    for word in program.split():
        if word in OPS:
            machine.apply(word)
        else:
            machine.push(int(word))
    return machine.pop()
