#!/usr/bin/env python3
"""Regenerate the bundled fixture netlists, annotations and run configs."""
import json
from pathlib import Path

DATA = Path(__file__).resolve().parents[1] / "src" / "scamap" / "data"

PRESENT_SBOX = "C56B90AD3EF84712"


def aes_sbox_hex():
    import sys
    sys.path.insert(0, str(DATA.parents[1]))
    from scamap.sca import AES_SBOX
    return "".join(f"{v:02X}" for v in AES_SBOX)


HALF_ADDER = """\
# sum = a ^ b, carry = a & b
module half_adder
  wire 1 input a
  wire 1 input b
  wire 1 output sum
  wire 1 output carry
  block XOR x0 in=a,b out=sum
  block AND a0 in=a,b out=carry
end
"""

FULL_ADDER = """\
module full_adder
  wire 1 input a
  wire 1 input b
  wire 1 input cin
  wire 1 output sum
  wire 1 output cout
  wire 1 internal t
  wire 1 internal g
  wire 1 internal h
  block XOR x0 in=a,b out=t
  block XOR x1 in=t,cin out=sum
  block AND a0 in=a,b out=g
  block AND a1 in=t,cin out=h
  block OR o0 in=g,h out=cout
end
"""


def sbox_module(name, width, table):
    return f"""\
# key addition followed by one Sbox lookup
module {name}
  wire {width} input p
  wire {width} input k
  wire {width} internal x
  wire {width} output y
  block XOR addkey in=p,k out=x
  block TABLE sbox in=x out=y
  table sbox {table}
end
"""


def present_player(i):
    return 63 if i == 63 else (16 * i) % 63


def present_round():
    lines = [
        "# one PRESENT round: addRoundKey, sBoxLayer, pLayer, state register",
        "module present_round",
        "  wire 64 input p",
        "  wire 64 input k",
        "  wire 64 internal x",
        "  wire 64 internal s",
        "  wire 64 output ct",
        "  block XOR addkey in=p,k out=x",
    ]
    for j in range(16):
        ins = ",".join(f"x[{4 * j + m}]" for m in (3, 2, 1, 0))
        outs = ",".join(f"s[{present_player(4 * j + m)}]" for m in (3, 2, 1, 0))
        lines.append(f"  block TABLE sbox{j} in={ins} out={outs}")
        lines.append(f"  table sbox{j} {PRESENT_SBOX}")
    lines.append("  block DFF state in=s out=ct")
    lines.append("end")
    return "\n".join(lines) + "\n"


def config(name, netlist, annotations, sbox, width, max_cells, iterations=1000, ports=("p", "k"), dpa_bit=0):
    return {
        "name": name,
        "netlist": netlist,
        "library": "fixture-65",
        "annotations": annotations,
        "output_dir": f"out/{name}",
        "seed": 1,
        "mode": "replicated",
        "fanout_threshold": 4,
        "ports": {"plaintext": ports[0], "key": ports[1]},
        "target": {"sbox": sbox, "offset": 0, "width": width, "dpa_bit": dpa_bit},
        "weights": {"alpha": 1.0, "beta": 1.0, "gamma": 1.0},
        "sa": {"initial_temp": 10.0, "cooling_rate": 0.95, "iterations": iterations, "max_cells": max_cells,
               "keep_top_k": 5},
        "model": {"w_cap": 1.0, "w_ds": 0.5, "static_w": 0.01, "noise_sigma": 0.5},
        "attack": {"num_traces": 4000, "attempts": 50, "threshold": 4.5, "tvla_traces": 2000, "fixed_plaintext": 0},
        "mi": {"bins": 16},
        "gridsearch": {"grid": [0.25, 0.5, 1, 2, 4], "attempts": 10},
    }


def main():
    nets = DATA / "netlists"
    anns = DATA / "annotations"
    cfgs = DATA / "configs"
    for d in (nets, anns, cfgs):
        d.mkdir(parents=True, exist_ok=True)
    files = {
        nets / "half_adder.net": HALF_ADDER,
        nets / "full_adder.net": FULL_ADDER,
        nets / "present_sbox.net": sbox_module("present_sbox", 4, PRESENT_SBOX),
        nets / "aes_sbox.net": sbox_module("aes_sbox", 8, aes_sbox_hex()),
        nets / "present_round.net": present_round(),
        nets / "impossible.net": HALF_ADDER,
    }
    for path, text in files.items():
        path.write_text(text)
    annotations = {
        "half_adder.json": {"sensitive_nets": ["sum"]},
        "full_adder.json": {"sensitive_nets": ["a", "b", "cin"]},
        "sbox.json": {"sensitive_nets": ["k", "x"], "intensive_blocks": [{"pattern": "sbox*"}]},
        "present_round.json": {"sensitive_nets": ["k", "x", "s"], "intensive_blocks": [{"pattern": "sbox*"}]},
    }
    for fname, doc in annotations.items():
        (anns / fname).write_text(json.dumps(doc, indent=2) + "\n")
    configs = [
        config("half_adder", "half_adder.net", "half_adder.json", "identity", 1, 8, ports=("a", "b")),
        config("full_adder", "full_adder.net", "full_adder.json", "identity", 1, 8, ports=("a", "b")),
        config("present_sbox", "present_sbox.net", "sbox.json", "present", 4, 128, dpa_bit=1),
        config("aes_sbox", "aes_sbox.net", "sbox.json", "aes", 8, 4000, iterations=1000),
        config("present_round", "present_round.net", "present_round.json", "present", 4, 128, dpa_bit=1),
    ]
    impossible = config("impossible", "impossible.net", "half_adder.json", "identity", 1, 8, ports=("a", "b"))
    impossible["library"] = "impossible_library.json"
    configs.append(impossible)
    for cfg in configs:
        (cfgs / f"{cfg['name']}.json").write_text(json.dumps(cfg, indent=2) + "\n")
    # a library with neither an inverter nor any XOR-capable path
    lib = {"name": "impossible", "node_label": "fixture-impossible", "cells": [
        {"name": "AND2_X1", "inputs": ["A", "B"], "output": "Z", "function": "A&B", "ds": 1, "cap": 1.9,
         "area": 1.67, "sequential": False},
        {"name": "OR2_X1", "inputs": ["A", "B"], "output": "Z", "function": "A|B", "ds": 1, "cap": 1.94,
         "area": 1.67, "sequential": False},
        {"name": "DFF_X1", "inputs": ["D"], "output": "Q", "function": "D", "ds": 1, "cap": 1.1,
         "area": 4.67, "sequential": True},
    ]}
    (cfgs / "impossible_library.json").write_text(json.dumps(lib, indent=1) + "\n")
    print("fixtures written to", DATA)


if __name__ == "__main__":
    main()
