class Shape:
    def __init__(self, name):
        self.name = name

    def area(self):
        raise NotImplementedError("area")

    def describe(self):
        return self.name

class Rect(Shape):
    def __init__(self, width, height):
        Shape.__init__(self, "rect")
        self.width = width
        self.height = height

    def area(self):
        return self.width * self.height

class Square(Rect):
    def __init__(self, side):
        Rect.__init__(self, side, side)

class Circle(Shape):
    def __init__(self, radius):
        Shape.__init__(self, "circle")
        self.radius = radius

    def area(self):
        return 3.14159 * self.radius ** 2

def total_area(shapes):
    total = 0.0
    for shape in shapes:
        total += shape.area()
    return total

def halves(n):
    whole = n // 2
    rest = n - whole * 2
    return whole, rest
