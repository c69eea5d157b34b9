#!/usr/bin/env python3
"""Regenerates the bundled subroutine QASM files.

Run from this directory: python3 generate.py
"""

import math

HEADER = 'OPENQASM 2.0;\ninclude "qelib1.inc";\n'


def ccx(out, a, b, c):
    out += [
        f"h {c};", f"cx {b},{c};", f"tdg {c};", f"cx {a},{c};", f"t {c};",
        f"cx {b},{c};", f"tdg {c};", f"cx {a},{c};", f"t {b};", f"t {c};",
        f"h {c};", f"cx {a},{b};", f"t {a};", f"tdg {b};", f"cx {a},{b};",
    ]


def cp(out, lam, a, b):
    out += [
        f"u1({lam / 2:.6f}) {a};", f"cx {a},{b};", f"u1({-lam / 2:.6f}) {b};",
        f"cx {a},{b};", f"u1({lam / 2:.6f}) {b};",
    ]


def swap(out, a, b):
    out += [f"cx {a},{b};", f"cx {b},{a};", f"cx {a},{b};"]


def add(n):
    """Ripple-carry (MAJ/UMA) adder with an end-around carry into the carry-in line."""
    body = []
    a = [f"a[{i}]" for i in range(n)]
    b = [f"b[{i}]" for i in range(n)]

    def maj(x, y, z):
        body.extend([f"cx {z},{y};", f"cx {z},{x};"])
        ccx(body, x, y, z)

    def uma(x, y, z):
        ccx(body, x, y, z)
        body.extend([f"cx {z},{x};", f"cx {x},{y};"])

    maj("cin[0]", b[0], a[0])
    for i in range(1, n):
        maj(a[i - 1], b[i], a[i])
    body.append(f"cx {a[n - 1]},cout[0];")
    body.append("cx cout[0],cin[0];")
    for i in reversed(range(1, n)):
        uma(a[i - 1], b[i], a[i])
    uma("cin[0]", b[0], a[0])
    regs = f"qreg cin[1];\nqreg a[{n}];\nqreg b[{n}];\nqreg cout[1];\n"
    return regs, body


def outofplace_add(n):
    """s := a + b with s initially zero; carry chain runs through s, and the
    top carry is folded back onto s[0]."""
    body = []
    for i in range(n):
        a, b, s, s1 = f"a[{i}]", f"b[{i}]", f"s[{i}]", f"s[{i + 1}]"
        ccx(body, a, b, s1)
        body.append(f"cx {a},{b};")
        ccx(body, b, s, s1)
        body.append(f"cx {b},{s};")
        body.append(f"cx {a},{b};")
    body.append(f"cx s[{n}],s[0];")
    regs = f"qreg a[{n}];\nqreg b[{n}];\nqreg s[{n + 1}];\n"
    return regs, body


def qft(n):
    body = []
    for j in range(n):
        body.append(f"h q[{j}];")
        for k in range(j + 1, n):
            cp(body, math.pi / 2 ** (k - j), f"q[{k}]", f"q[{j}]")
    for i in range(n // 2):
        swap(body, f"q[{i}]", f"q[{n - 1 - i}]")
    return f"qreg q[{n}];\n", body


def t_npe(n, steps=2):
    """First-order Trotter steps of a periodic transverse-field Ising ring."""
    body = []
    for _ in range(steps):
        for i in range(n):
            body.append(f"rx(0.300000) q[{i}];")
        for i in range(n):
            a, b = f"q[{i}]", f"q[{(i + 1) % n}]"
            body += [f"cx {a},{b};", f"rz(0.200000) {b};", f"cx {a},{b};"]
    return f"qreg q[{n}];\n", body


FAMILIES = {
    "add": (add, range(3, 8)),
    "outofplace_add": (outofplace_add, range(3, 7)),
    "qft": (qft, range(4, 9)),
    "t_npe": (t_npe, range(3, 7)),
}

if __name__ == "__main__":
    for family, (build, sizes) in FAMILIES.items():
        for n in sizes:
            regs, body = build(n)
            name = f"{family}_{n}"
            with open(f"{name}.qasm", "w") as fh:
                fh.write(f"// {name}\n" + HEADER + regs + "\n".join(body) + "\n")
