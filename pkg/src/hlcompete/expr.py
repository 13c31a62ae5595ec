"""Tiny arithmetic expression language for user-supplied profiles.

Grammar: numbers, the variables named at compile time (``x`` and ``c`` for
size profiles), the constants ``pi`` and ``e``, the operators
``+ - * / **`` (``^`` is accepted as a synonym for ``**``), unary minus and
the functions ``log``, ``sin``, ``cos``, ``exp``, ``sqrt``.  Expressions are
parsed with :mod:`ast` and evaluated by walking the tree, so arbitrary Python
is never executed.  Evaluation is vectorised over numpy arrays.
"""
import ast
import math
import operator

import numpy as np

FUNCTIONS = {
    "log": np.log,
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "sqrt": np.sqrt,
}
CONSTANTS = {"pi": math.pi, "e": math.e}
_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: np.power,
}


class ExpressionError(ValueError):
    pass


class Expression:
    """A compiled expression; call it with keyword arguments for its variables."""

    def __init__(self, text, variables=("x", "c")):
        self.text = text
        self.variables = tuple(variables)
        try:
            tree = ast.parse(text.replace("^", "**"), mode="eval")
        except SyntaxError as exc:
            raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from None
        self._check(tree.body)
        self._tree = tree.body

    def _check(self, node):
        if isinstance(node, ast.BinOp):
            if type(node.op) not in _BINOPS:
                raise ExpressionError(f"operator {type(node.op).__name__} not allowed in {self.text!r}")
            self._check(node.left)
            self._check(node.right)
        elif isinstance(node, ast.UnaryOp):
            if not isinstance(node.op, (ast.USub, ast.UAdd)):
                raise ExpressionError(f"unary operator not allowed in {self.text!r}")
            self._check(node.operand)
        elif isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
                raise ExpressionError(f"unknown function in {self.text!r}")
            if len(node.args) != 1 or node.keywords:
                raise ExpressionError(f"functions take exactly one argument in {self.text!r}")
            self._check(node.args[0])
        elif isinstance(node, ast.Name):
            if node.id not in self.variables and node.id not in CONSTANTS:
                raise ExpressionError(f"unknown name {node.id!r} in {self.text!r}")
        elif isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
                raise ExpressionError(f"only numeric literals allowed in {self.text!r}")
        else:
            raise ExpressionError(f"unsupported syntax {type(node).__name__} in {self.text!r}")

    def _eval(self, node, env):
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](self._eval(node.left, env), self._eval(node.right, env))
        if isinstance(node, ast.UnaryOp):
            val = self._eval(node.operand, env)
            return -val if isinstance(node.op, ast.USub) else val
        if isinstance(node, ast.Call):
            return FUNCTIONS[node.func.id](self._eval(node.args[0], env))
        if isinstance(node, ast.Name):
            return env[node.id] if node.id in env else CONSTANTS[node.id]
        return float(node.value)

    def __call__(self, **values):
        missing = set(self.variables) - set(values)
        if missing:
            raise ExpressionError(f"missing values for {sorted(missing)} in {self.text!r}")
        env = {k: np.asarray(v, dtype=float) for k, v in values.items()}
        with np.errstate(all="ignore"):
            out = self._eval(self._tree, env)
        out = np.asarray(out, dtype=float)
        shape = np.broadcast_shapes(*(v.shape for v in env.values())) if env else ()
        out = np.broadcast_to(out, shape).copy() if out.shape != shape else out
        return out[()] if out.ndim == 0 else out

    def __repr__(self):
        return f"Expression({self.text!r})"
