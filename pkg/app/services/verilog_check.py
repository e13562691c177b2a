"""Line-based structural check of emitted Verilog.

Covers the subset the generator writes: ANSI headers with one port per line,
one declaration or instance per line. Reports unbalanced module/endmodule,
identifiers used without a declaration, and instances whose port set differs
from the instantiated module.
"""

from __future__ import annotations

import re
from collections.abc import Mapping
from dataclasses import dataclass, field

KEYWORDS = frozenset(
    {
        "always", "and", "assign", "begin", "case", "default", "else", "end",
        "endcase", "endfunction", "endmodule", "endtask", "for", "forever",
        "function", "if", "initial", "inout", "input", "integer", "localparam",
        "module", "negedge", "not", "or", "output", "parameter", "posedge",
        "reg", "repeat", "signed", "task", "unsigned", "while", "wire",
    }
)

_STRING = re.compile(r'"(?:[^"\\]|\\.)*"')
_COMMENT = re.compile(r"//.*$")
_LITERAL = re.compile(r"\d*'[sS]?[bodhBODH][0-9a-fA-F_xzXZ]+")
_SYSTEM = re.compile(r"\$\w+")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_RANGE = re.compile(r"\[[^\]]*\]")
_DECL = re.compile(r"^\s*(input|output|inout|wire|reg|integer|localparam|parameter)\b(.*)$")
_MODULE = re.compile(r"^\s*module\s+(\w+)")
_ENDMODULE = re.compile(r"^\s*endmodule\b")
_INSTANCE = re.compile(r"^\s*(\w+)\s+(\w+)\s*\((.*)\);\s*$")
_PORT = re.compile(r"\.(\w+)\s*\(")


@dataclass
class ModuleInfo:
    name: str
    source: str
    ports: list[str] = field(default_factory=list)
    declared: set[str] = field(default_factory=set)
    body: list[tuple[int, str]] = field(default_factory=list)


def clean_line(line: str) -> str:
    """Drop strings, comments, sized literals, system tasks and directives."""
    if line.lstrip().startswith("`"):
        return ""
    line = _STRING.sub('""', line)
    line = _COMMENT.sub("", line)
    line = _LITERAL.sub(" 0 ", line)
    return _SYSTEM.sub(" ", line)


def _declared_names(rest: str) -> list[str]:
    rest = _RANGE.sub(" ", rest)
    rest = rest.split("=", 1)[0]
    names = []
    for piece in re.split(r"[,;)]", rest):
        tokens = [t for t in _IDENT.findall(piece) if t not in ("signed", "reg", "wire", "unsigned")]
        if tokens:
            names.append(tokens[-1])
    return names


def parse_modules(files: Mapping[str, str]) -> tuple[dict[str, ModuleInfo], list[str]]:
    modules: dict[str, ModuleInfo] = {}
    problems: list[str] = []
    for path in sorted(files):
        if not path.endswith(".v"):
            continue
        current: ModuleInfo | None = None
        for number, raw in enumerate(files[path].splitlines(), start=1):
            line = clean_line(raw)
            if not line.strip():
                continue
            match = _MODULE.match(line)
            if match:
                if current is not None:
                    problems.append(f"{path}:{number}: module {match.group(1)} opened inside {current.name}")
                current = ModuleInfo(match.group(1), path)
                if current.name in modules:
                    problems.append(f"{path}:{number}: module {current.name} defined twice")
                modules[current.name] = current
                continue
            if _ENDMODULE.match(line):
                if current is None:
                    problems.append(f"{path}:{number}: endmodule without module")
                current = None
                continue
            if current is None:
                problems.append(f"{path}:{number}: statement outside any module")
                continue
            decl = _DECL.match(line)
            if decl:
                names = _declared_names(decl.group(2))
                current.declared.update(names)
                if decl.group(1) in ("input", "output", "inout"):
                    current.ports.extend(names)
            current.body.append((number, line))
        if current is not None:
            problems.append(f"{path}: module {current.name} missing endmodule")
    return modules, problems


def _used_identifiers(line: str) -> list[str]:
    decl = _DECL.match(line)
    if decl:
        # only initializers reference other signals
        if "=" not in decl.group(2):
            return []
        line = _RANGE.sub(" ", decl.group(2)).split("=", 1)[1]
    line = _PORT.sub("(", line)
    return [t for t in _IDENT.findall(line) if t not in KEYWORDS]


def check_verilog(
    files: Mapping[str, str],
    externals: Mapping[str, list[str]] | None = None,
) -> list[str]:
    """Structural problems across a file set; empty when well-formed.

    ``externals`` names modules defined outside the set, with their ports.
    """
    modules, problems = parse_modules(files)
    defined = list(modules.values())
    for name, ports in (externals or {}).items():
        modules.setdefault(name, ModuleInfo(name, "<external>", ports=list(ports)))
    for module in defined:
        for number, line in module.body:
            where = f"{module.source}:{number}"
            instance = _INSTANCE.match(line)
            if instance and instance.group(1) in modules:
                target = modules[instance.group(1)]
                connected = _PORT.findall(instance.group(3))
                if sorted(connected) != sorted(target.ports):
                    problems.append(
                        f"{where}: instance {instance.group(2)} connects {len(connected)} ports, "
                        f"{target.name} has {len(target.ports)}"
                    )
                used = _used_identifiers(instance.group(3))
            else:
                used = _used_identifiers(line)
            for name in used:
                if name not in module.declared:
                    problems.append(f"{where}: {module.name} uses undeclared {name}")
    return problems
