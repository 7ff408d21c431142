"""Differentiable programming language with while-loops and recursion, plus its partial-map semantics."""
