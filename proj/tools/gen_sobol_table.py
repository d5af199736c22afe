#!/usr/bin/env python3
"""Regenerate include/uqbench/detail/sobol_table.hpp.

Reads the Joe-Kuo (new-joe-kuo-6.21201) primitive polynomials and initial
direction numbers bundled with scipy and emits the first MAX_DIM dimensions
as a constexpr table.
"""
import os
import sys

import numpy as np
import scipy

MAX_DIM = 1111

src = os.path.join(os.path.dirname(scipy.__file__), "stats", "_sobol_direction_numbers.npz")
data = np.load(src)
poly = data["poly"][:MAX_DIM]
vinit = data["vinit"][:MAX_DIM]
max_degree = max(int(p).bit_length() - 1 for p in poly)

out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(
    os.path.dirname(__file__), "..", "include", "uqbench", "detail", "sobol_table.hpp")

with open(out, "w") as f:
    f.write("// Generated by tools/gen_sobol_table.py. Do not edit.\n")
    f.write("// Joe-Kuo direction numbers (new-joe-kuo-6.21201), first %d dimensions.\n" % MAX_DIM)
    f.write("#pragma once\n\n#include <array>\n#include <cstddef>\n#include <cstdint>\n\n")
    f.write("namespace uqbench::detail {\n\n")
    f.write("inline constexpr std::size_t kSobolMaxDim = %d;\n" % MAX_DIM)
    f.write("inline constexpr std::size_t kSobolMaxDegree = %d;\n\n" % max_degree)
    f.write("struct SobolPoly {\n  std::uint32_t poly;  // primitive polynomial incl. leading and constant bits\n")
    f.write("  std::array<std::uint16_t, kSobolMaxDegree> m;  // initial direction numbers\n};\n\n")
    f.write("// Entry 0 is the van der Corput dimension (all direction numbers 1).\n")
    f.write("inline constexpr std::array<SobolPoly, kSobolMaxDim> kSobolTable{{\n")
    for p, row in zip(poly, vinit):
        deg = int(p).bit_length() - 1
        ms = [int(x) for x in row[:max_degree]]
        if deg == 0:
            ms = [0] * max_degree
        f.write("    {%d, {%s}},\n" % (int(p), ",".join(str(x) for x in ms)))
    f.write("}};\n\n}  // namespace uqbench::detail\n")
