"""Strips meaning from a single-function listing by renaming identifiers.

The function becomes `foo`; its parameters and locals take names from a
generic pool (a..z, then a1..z1, a2..) in first-appearance order. Free
names (builtins, imported modules, globals) are left alone, and pool
names that would collide with surviving identifiers are skipped. The
output compiles to the same behavior as the input; a listing that is
already fully generic comes back byte-identical.
"""

from __future__ import annotations

import ast
import itertools
import string
from typing import Iterable, Iterator

from .errors import MultipleFunctions, UnparseableSource


def generic_names() -> Iterator[str]:
    """a..z, a1..z1, a2..z2, ... without end."""
    for letter in string.ascii_lowercase:
        yield letter
    for i in itertools.count(1):
        for letter in string.ascii_lowercase:
            yield f"{letter}{i}"


def _ordered_walk(node: ast.AST) -> Iterator[ast.AST]:
    yield node
    for child in ast.iter_child_nodes(node):
        yield from _ordered_walk(child)


def _param_names(args: ast.arguments) -> list[str]:
    names = [a.arg for a in args.posonlyargs + args.args]
    if args.vararg:
        names.append(args.vararg.arg)
    names.extend(a.arg for a in args.kwonlyargs)
    if args.kwarg:
        names.append(args.kwarg.arg)
    return names


def _bound_names(fn: ast.FunctionDef) -> list[str]:
    """Parameters first, then every locally bound name in source order."""
    seen: list[str] = []

    def add(name: str) -> None:
        if name not in seen:
            seen.append(name)

    for name in _param_names(fn.args):
        add(name)
    for node in _ordered_walk(fn):
        if node is fn:
            continue
        if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)):
            add(node.name)
            for name in _param_names(node.args):
                add(name)
        elif isinstance(node, ast.Lambda):
            for name in _param_names(node.args):
                add(name)
        elif isinstance(node, ast.Name) and isinstance(node.ctx, (ast.Store, ast.Del)):
            add(node.id)
        elif isinstance(node, ast.ExceptHandler) and node.name:
            add(node.name)
        elif isinstance(node, ast.Nonlocal):
            for name in node.names:
                add(name)
    return seen


def _apply(node: ast.AST, mapping: dict[str, str]) -> None:
    for sub in ast.walk(node):
        if isinstance(sub, ast.Name) and sub.id in mapping:
            sub.id = mapping[sub.id]
        elif isinstance(sub, ast.arg) and sub.arg in mapping:
            sub.arg = mapping[sub.arg]
        elif isinstance(sub, (ast.FunctionDef, ast.AsyncFunctionDef)):
            if sub.name in mapping:
                sub.name = mapping[sub.name]
        elif isinstance(sub, ast.ExceptHandler) and sub.name in mapping:
            sub.name = mapping[sub.name]
        elif isinstance(sub, (ast.Global, ast.Nonlocal)):
            sub.names = [mapping.get(n, n) for n in sub.names]


def obfuscate_source(source: str, names: Iterable[str] | None = None) -> str:
    """Rename the one top-level function to foo with generic locals.

    Raises UnparseableSource when the text is not valid code or holds no
    top-level function, MultipleFunctions when it holds more than one.
    """
    try:
        tree = ast.parse(source)
    except (SyntaxError, ValueError) as exc:
        raise UnparseableSource(str(exc))
    defs = [
        n for n in tree.body if isinstance(n, (ast.FunctionDef, ast.AsyncFunctionDef))
    ]
    if len(defs) > 1:
        raise MultipleFunctions(f"{len(defs)} top-level functions, expected one")
    if not defs:
        raise UnparseableSource("no top-level function definition")
    fn = defs[0]

    protected: set[str] = set()
    for node in ast.walk(fn):
        if isinstance(node, ast.Global):
            protected.update(node.names)
    to_rename = [n for n in _bound_names(fn) if n not in protected]

    all_idents: set[str] = set()
    for node in ast.walk(tree):
        if isinstance(node, ast.Name):
            all_idents.add(node.id)
        elif isinstance(node, ast.arg):
            all_idents.add(node.arg)
        elif isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)):
            all_idents.add(node.name)
        elif isinstance(node, ast.alias):
            all_idents.add((node.asname or node.name).split(".")[0])
    surviving = all_idents - set(to_rename) - {fn.name}

    mapping: dict[str, str] = {fn.name: "foo"}
    taken: set[str] = {"foo"}
    pool = iter(names) if names is not None else generic_names()
    for old in to_rename:
        for candidate in pool:
            if candidate not in surviving and candidate not in taken:
                mapping[old] = candidate
                taken.add(candidate)
                break
        else:
            raise UnparseableSource("generic name pool exhausted")

    if all(old == new for old, new in mapping.items()):
        return source

    # Locals rename inside the function only; the function's own name
    # follows call sites anywhere in the module.
    old_name = fn.name
    _apply(fn, mapping)
    if old_name != "foo":
        for node in tree.body:
            if node is not fn:
                _apply(node, {old_name: "foo"})
    ast.fix_missing_locations(tree)
    return ast.unparse(tree) + "\n"
