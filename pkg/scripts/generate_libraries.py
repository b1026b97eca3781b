#!/usr/bin/env python3
"""Regenerate the bundled synthetic cell libraries.

Cells are fictitious.  Drive index ``ds`` follows the X-suffix, ``cap`` is the
summed input-pin capacitance normalised to the X1 inverter of the 65 node and
area is in X1-inverter units.  Within a drive family ds strictly increases and
cap never decreases.
"""
import json
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "scamap" / "data" / "libraries"

# name, pins, function, area(X1), per-pin cap(X1)
FUNCTIONS = [
    ("INV", "A", "!A", 1.00, 1.00),
    ("BUF", "A", "A", 1.33, 0.95),
    ("NAND2", "AB", "!(A&B)", 1.33, 1.05),
    ("NOR2", "AB", "!(A|B)", 1.33, 1.10),
    ("AND2", "AB", "A&B", 1.67, 0.95),
    ("OR2", "AB", "A|B", 1.67, 0.97),
    ("NAND3", "ABC", "!(A&B&C)", 1.67, 1.05),
    ("NOR3", "ABC", "!(A|B|C)", 2.00, 1.15),
    ("AND3", "ABC", "A&B&C", 2.00, 0.95),
    ("OR3", "ABC", "A|B|C", 2.00, 0.97),
    ("NAND4", "ABCD", "!(A&B&C&D)", 2.00, 1.05),
    ("NOR4", "ABCD", "!(A|B|C|D)", 2.33, 1.20),
    ("AND4", "ABCD", "A&B&C&D", 2.33, 0.95),
    ("OR4", "ABCD", "A|B|C|D", 2.33, 0.98),
    ("XOR2", "AB", "A^B", 2.33, 1.80),
    ("XNOR2", "AB", "!(A^B)", 2.33, 1.75),
    ("XOR3", "ABC", "A^B^C", 4.00, 1.90),
    ("XNOR3", "ABC", "!(A^B^C)", 4.00, 1.90),
    ("AOI21", "ABC", "!((A&B)|C)", 1.67, 1.05),
    ("OAI21", "ABC", "!((A|B)&C)", 1.67, 1.05),
    ("AOI22", "ABCD", "!((A&B)|(C&D))", 2.00, 1.05),
    ("OAI22", "ABCD", "!((A|B)&(C|D))", 2.00, 1.05),
    ("AO21", "ABC", "(A&B)|C", 2.00, 0.95),
    ("OA21", "ABC", "(A|B)&C", 2.00, 0.95),
    ("AO22", "ABCD", "(A&B)|(C&D)", 2.33, 0.95),
    ("OA22", "ABCD", "(A|B)&(C|D)", 2.33, 0.95),
    ("AOI211", "ABCD", "!((A&B)|C|D)", 2.00, 1.10),
    ("OAI211", "ABCD", "!((A|B)&C&D)", 2.00, 1.10),
    ("AOI31", "ABCD", "!((A&B&C)|D)", 2.00, 1.05),
    ("OAI31", "ABCD", "!((A|B|C)&D)", 2.00, 1.05),
    ("AOI221", "ABCDE", "!((A&B)|(C&D)|E)", 2.67, 1.10),
    ("OAI221", "ABCDE", "!((A|B)&(C|D)&E)", 2.67, 1.10),
    ("MUX2", "ABS", "(S&B)|(!S&A)", 3.00, 1.25),
    ("MUXI2", "ABS", "!((S&B)|(!S&A))", 2.67, 1.25),
    ("MAJ3", "ABC", "(A&B)|(A&C)|(B&C)", 3.00, 1.45),
    ("ANDN2", "AB", "A&!B", 1.67, 1.00),
    ("ORN2", "AB", "A|!B", 1.67, 1.00),
    ("DFF", "D", "D", 4.67, 1.10),
]

DRIVE_AREA = {1: 1.0, 2: 1.33, 3: 1.67, 4: 2.0, 8: 3.33, 16: 6.0}
DRIVE_CAP = {1: 1.0, 2: 1.8, 3: 2.5, 4: 3.3, 8: 6.2, 16: 12.0}

NODES = {
    # label: (name, area scale, cap scale, drive plan)
    "fixture-65": ("fixture65", 1.00, 1.00, None),
    "fixture-45": ("fixture45", 0.62, 0.85, None),
    "fixture-15": ("fixture15", 0.20, 0.70, None),
}

X8_45 = {"INV", "BUF", "NAND2", "NOR2", "AND2", "OR2", "NAND3", "NOR3", "AND3", "OR3",
         "NAND4", "NOR4", "XOR2", "XNOR2", "AOI21", "OAI21", "AOI22", "OAI22", "MUX2", "DFF"}


def drives_for(label, fname, index):
    if label == "fixture-15":
        return [1, 2]
    if label == "fixture-45":
        return [1, 2, 4] + ([8] if fname in X8_45 else [])
    extra = [3] if index < 26 else []
    return sorted([1, 2, 4, 8, 16] + extra)


def make(label):
    lib_name, area_scale, cap_scale, _ = NODES[label]
    cells = []
    for index, (fname, pins, fn, area, pin_cap) in enumerate(FUNCTIONS):
        seq = fname == "DFF"
        for d in drives_for(label, fname, index):
            cap = pin_cap * len(pins) * cap_scale
            # flip-flop input load barely grows with output drive
            cap *= (1 + 0.05 * (d - 1)) if seq else DRIVE_CAP[d]
            cells.append({
                "name": f"{fname}_X{d}",
                "inputs": list(pins),
                "output": "Q" if seq else ("ZN" if fn.startswith("!") else "Z"),
                "function": fn,
                "ds": float(d),
                "cap": round(cap, 4),
                "area": round(area * area_scale * DRIVE_AREA[d], 4),
                "sequential": seq,
            })
    return {"name": lib_name, "node_label": label, "cells": cells}


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for label in NODES:
        doc = make(label)
        path = OUT / f"{label}.json"
        path.write_text(json.dumps(doc, indent=1) + "\n")
        print(f"{path.name}: {len(doc['cells'])} cells")


if __name__ == "__main__":
    main()
