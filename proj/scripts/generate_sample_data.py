#!/usr/bin/env python3
"""Regenerate the synthetic sample datasets and demo fixtures under data/.

The samples mirror the published evaluation sizes (bigbench: 300 traces,
1506 steps, 62 correct; prm800k: 300 traces, 3736 steps, 85 correct) with
deterministic synthetic arithmetic content, so loaders, integrity checks and
offline runs are exercised against realistically shaped files. Run from the
repository root:

    python3 scripts/generate_sample_data.py
"""

import json
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "data"

LABELS = {
    1: "correct-and-aligned",
    2: "correct-and-aligned",
    3: "correct-and-aligned",
}


def arithmetic_trace(rng, n_steps, mistake_at=None):
    """Multi-step arithmetic chain; the mistake step gets a wrong value."""
    values = [rng.randint(2, 9)]
    ops = []
    for _ in range(n_steps):
        op = rng.choice(["+", "-", "*"])
        operand = rng.randint(2, 9)
        ops.append((op, operand))

    expr = str(values[0])
    for op, operand in ops:
        expr = f"({expr} {op} {operand})"
    question = f"Compute {expr}."

    verbs = {"+": "Add", "-": "Subtract", "*": "Multiply by"}
    steps = []
    shown = values[0]
    for i, (op, operand) in enumerate(ops, start=1):
        true_partial = eval(f"{shown} {op} {operand}")  # noqa: S307 - generator input
        value = true_partial
        if mistake_at == i:
            value = true_partial + rng.choice([-3, -2, 2, 3])
        steps.append(f"{verbs[op]} {operand}: {shown} {op} {operand} = {value}.")
        shown = value
    return question, steps


def word_problem_trace(rng, n_steps):
    a, b, c = rng.randint(3, 20), rng.randint(2, 12), rng.randint(2, 9)
    question = (
        f"A workshop packs {a} boxes per hour for {b} hours, then splits the boxes "
        f"evenly among {c} shelves. How many boxes end up on each shelf? "
        f"Show every step of your reasoning."
    )
    total = a * b
    per_shelf = total // c
    base = [
        f"We first find the total number of boxes: {a} * {b} = {total}.",
        f"Next we divide the total evenly: {total} / {c}.",
        f"That gives {per_shelf} boxes per shelf (ignoring remainders).",
    ]
    steps = list(base)
    fillers = [
        "Let me double-check the multiplication by adding {a} a total of {b} times.",
        "We can verify the division by multiplying back: {p} * {c}.",
        "Restating the quantities to keep track of units: boxes per shelf.",
        "We note the remainder, if any, is distributed later.",
        "Rounding is not needed because the numbers divide evenly here.",
        "We confirm no boxes were lost in the packing count.",
        "The intermediate total matches the per-hour rate times hours.",
        "Checking magnitudes: the result should be smaller than the total.",
        "Units check out: boxes divided by shelves gives boxes per shelf.",
        "We restate the goal: boxes on each shelf after the split.",
        "A quick sanity bound: the answer is at most the total box count.",
        "The division step is exact, so no fractional boxes appear.",
        "We re-derive the total from the packing schedule to be safe.",
        "Cross-checking with a rough estimate keeps the result plausible.",
    ]
    i = 0
    while len(steps) < n_steps:
        steps.append(fillers[i % len(fillers)].format(a=a, b=b, c=c, p=per_shelf))
        i += 1
    return question, steps[:n_steps]


def make_bigbench(rng):
    # 294 traces of 5 steps + 6 of 6 steps = 1506 steps; 62 correct
    sizes = [5] * 294 + [6] * 6
    rng.shuffle(sizes)
    correct = set(rng.sample(range(300), 62))
    records = []
    for idx, n in enumerate(sizes):
        mistake = None if idx in correct else rng.randint(1, n)
        question, steps = arithmetic_trace(rng, n, mistake)
        records.append(
            {
                "id": f"bigbench-{idx + 1:04d}",
                "input": question,
                "steps": steps,
                # source convention: 0-based location, null when correct
                "mistake_index": None if mistake is None else mistake - 1,
            }
        )
    return records


def make_prm800k(rng):
    # 264 traces of 12 steps + 28 of 16 + 8 of 15 = 3736 steps; 85 correct
    sizes = [12] * 264 + [16] * 28 + [15] * 8
    rng.shuffle(sizes)
    correct = set(rng.sample(range(300), 85))
    records = []
    for idx, n in enumerate(sizes):
        question, steps = word_problem_trace(rng, n)
        if idx in correct:
            ratings = [rng.choice(["positive", "positive", "neutral"]) for _ in range(n)]
        else:
            first_bad = rng.randint(1, n)
            ratings = []
            for i in range(1, n + 1):
                if i < first_bad:
                    ratings.append(rng.choice(["positive", "positive", "neutral"]))
                elif i == first_bad:
                    ratings.append("negative")
                else:
                    ratings.append(rng.choice(["positive", "neutral", "negative"]))
        records.append(
            {
                "id": f"prm800k-{idx + 1:04d}",
                "question": question,
                "steps": steps,
                "ratings": ratings,
            }
        )
    return records


def stage1_response(nums=(1, 2, 3)):
    parts = {
        1: "1. The expected step relies on the order of operations and basic integer arithmetic.",
        2: "2. The expected step applies the next pending operation to the running total.",
        3: "3. The expected step computes the next partial result from the current value.",
    }
    return "\n\n".join(parts[k] for k in nums)


def stage2_response(verdicts, nums=(1, 2, 3)):
    sections = {
        1: "Part 1 - mathematical concepts: the step uses integer arithmetic, as expected.",
        2: "Part 2 - problem-solving approaches: the step applies the pending operation.",
        3: "Part 3 - calculations: redoing the arithmetic of the current step.",
    }
    body = "\n".join(sections[k] for k in nums)
    lines = "\n".join(f"Principle {k}: {verdicts.get(k, 'correct-and-aligned')}" for k in nums)
    return body + "\n" + lines


def make_demo_traces(rng):
    """Six small traces; the mock verdicts disagree with gold on purpose for
    two of them so demo metrics are not trivially perfect."""
    plan = [
        # (steps, gold mistake, predicted mistake)  None = correct
        (3, None, None),
        (4, None, None),
        (3, 2, 2),
        (4, 3, 3),
        (5, 2, 4),      # predicted wrong location
        (3, None, 2),   # false alarm on a correct trace
    ]
    records = []
    for idx, (n, gold, _pred) in enumerate(plan):
        question, steps = arithmetic_trace(rng, n, gold)
        records.append(
            {
                "id": f"demo-{idx + 1}",
                "input": question,
                "steps": steps,
                "mistake_index": None if gold is None else gold - 1,
            }
        )
    return plan, records


def pedcot_fixtures(plan, nums=(1, 2, 3)):
    fixtures = {}
    for idx, (n, _gold, pred) in enumerate(plan):
        tid = f"demo-{idx + 1}"
        last = n if pred is None else pred
        for i in range(1, last + 1):
            fixtures[f"{tid}/{i}/1"] = stage1_response(nums)
            verdict = {3: "contradiction-found"} if (pred is not None and i == pred) else {}
            fixtures[f"{tid}/{i}/2"] = stage2_response(verdict, nums)
    return fixtures


def onestage_fixtures(plan):
    fixtures = {}
    for idx, (n, _gold, pred) in enumerate(plan):
        tid = f"demo-{idx + 1}"
        last = n if pred is None else pred
        for i in range(1, last + 1):
            verdict = {3: "contradiction-found"} if (pred is not None and i == pred) else {}
            fixtures[f"{tid}/{i}/1"] = stage2_response(verdict)
    return fixtures


def direct_step_fixtures(plan):
    fixtures = {}
    for idx, (n, _gold, pred) in enumerate(plan):
        tid = f"demo-{idx + 1}"
        last = n if pred is None else pred
        for i in range(1, last + 1):
            fixtures[f"{tid}/{i}/1"] = "no" if (pred is not None and i == pred) else "yes"
    return fixtures


def two_round_fixtures(plan):
    """vanilla-two-stage and zero-shot-cot: analysis at stage 1, label at 2."""
    fixtures = {}
    for idx, (n, _gold, pred) in enumerate(plan):
        tid = f"demo-{idx + 1}"
        last = n if pred is None else pred
        for i in range(1, last + 1):
            bad = pred is not None and i == pred
            fixtures[f"{tid}/{i}/1"] = (
                "The step repeats the pending operation and its arithmetic looks "
                + ("inconsistent with the running total." if bad else "consistent.")
            )
            fixtures[f"{tid}/{i}/2"] = "no" if bad else "yes"
    return fixtures


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as f:
        for r in records:
            f.write(json.dumps(r, ensure_ascii=False) + "\n")


def main():
    OUT.mkdir(exist_ok=True)
    rng = random.Random(20240915)

    write_jsonl(OUT / "bigbench_math_sample.jsonl", make_bigbench(rng))
    write_jsonl(OUT / "prm800k_sample.jsonl", make_prm800k(rng))

    plan, demo = make_demo_traces(rng)
    write_jsonl(OUT / "demo_traces.jsonl", demo)

    fixture_files = {
        "demo_fixtures_pedcot.json": pedcot_fixtures(plan),
        "demo_fixtures_pedcot_ablate2.json": pedcot_fixtures(plan, nums=(1, 3)),
        "demo_fixtures_one_stage.json": onestage_fixtures(plan),
        "demo_fixtures_direct_step.json": direct_step_fixtures(plan),
        "demo_fixtures_two_round.json": two_round_fixtures(plan),
    }
    for name, fixtures in fixture_files.items():
        with open(OUT / name, "w", encoding="utf-8") as f:
            json.dump(fixtures, f, indent=2, sort_keys=True)
            f.write("\n")

    print(f"wrote {len(fixture_files) + 3} files to {OUT}")


if __name__ == "__main__":
    main()
