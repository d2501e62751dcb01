"""Deterministic corpus of malformed and borderline config texts."""

import random

from protectq.config import SCHEMA

VALID = """\
model.preset = transmon
task.command = sweep
task.param = n_gate
task.start = 0
task.stop = 1
task.points = 5
"""

JUNK_VALUES = ["", "nan", "inf", "-inf", "-1", "0", "1e400", "abc", "1,2", "0x10", "1e-400", "  ", "=", "#",
               "\x00", "3.5.1", "[]", "{}", "True", "-0", "1_000", "9" * 400, "é", "1;2", "2,,3"]


def corpus(n=150, seed=7):
    rng = random.Random(seed)
    keys = sorted(SCHEMA) + ["model.bogus", "task", ".", "model..E_C", "MODEL.E_C", "output.format.x"]
    cases = ["", "\n\n", "# only a comment", "=", "key", "= value", VALID, VALID + VALID,
             VALID.replace("=", ":"), VALID + "model.E_C = -1\n", "﻿" + VALID, VALID * 3 + "\x00"]
    while len(cases) < n:
        kind = rng.randrange(5)
        if kind == 0:
            lines = VALID.splitlines()
            i = rng.randrange(len(lines))
            k = lines[i].split("=")[0]
            lines[i] = f"{k}= {rng.choice(JUNK_VALUES)}"
            cases.append("\n".join(lines))
        elif kind == 1:
            cases.append("\n".join(f"{rng.choice(keys)} = {rng.choice(JUNK_VALUES)}" for _ in range(rng.randrange(1, 8))))
        elif kind == 2:
            cases.append("".join(chr(rng.randrange(1, 0x2FF)) for _ in range(rng.randrange(1, 200))))
        elif kind == 3:
            fam = rng.choice(["charge", "flux", "two_mode", "hybrid", "quantum"])
            body = [f"model.family = {fam}", f"task.command = {rng.choice(['spectrum', 'sweep', 'fly', 'validate'])}"]
            for k in rng.sample(keys, rng.randrange(0, 6)):
                body.append(f"{k} = {rng.choice(JUNK_VALUES + ['0.5', '2', '0.1, 0.2'])}")
            cases.append("\n".join(body))
        else:
            s = list(VALID)
            for _ in range(rng.randrange(1, 10)):
                s[rng.randrange(len(s))] = chr(rng.randrange(32, 127))
            cases.append("".join(s))
    return cases
