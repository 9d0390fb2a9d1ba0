"""Regenerate the canonical fixture files under fixtures/."""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from tutorkit.model import canonical_json, fragment_to_dict, load_fragment  # noqa: E402

ROOT = pathlib.Path(__file__).resolve().parents[1]


def lesson(node_id, title, reps):
    return {
        "id": node_id,
        "kind": "lesson",
        "title": title,
        "representations": reps,
        "max_attempts": None,
        "kind_data": {},
    }


def edge(eid, source, target, condition, label=None):
    return {"id": eid, "source": source, "target": target, "condition": condition, "label": label}


FIXTURE = {
    "id": "stats-avg-median",
    "title": "Average and median: learn, check, recover, code",
    "version": 1,
    "entry": "L1",
    "provides": ["average", "difference", "median"],
    "requires": [],
    "cost": 1.0,
    "nodes": [
        lesson("L1", "What the average is", {"text": "The average of a list is the sum divided by the count.", "audio": "uri:audio/average-intro"}),
        {
            "id": "Q1",
            "kind": "close_ended",
            "title": "Compute an average",
            "representations": {"text": "What is the average of 1, 2, 3, 4, 5?"},
            "max_attempts": None,
            "kind_data": {
                "prompt": "What is the average of 1, 2, 3, 4, 5?",
                "expected": {"value": 3, "tolerance": 1e-9},
                "distractors": {},
            },
        },
        lesson("R1", "Averages, step by step", {"text": "Review: add the values, then divide by how many there are."}),
        {
            "id": "Z1",
            "kind": "quiz",
            "title": "Average check",
            "representations": {"text": "Two quick questions about averages."},
            "max_attempts": None,
            "kind_data": {
                "items": [
                    {"stem": "Average of 2 and 4?", "choices": ["2", "3", "4"], "correct": 1},
                    {"stem": "Average of 10, 20, 30?", "choices": ["15", "20", "25"], "correct": 1},
                ],
                "pass_threshold": 0.6,
            },
        },
        lesson("L2", "What the median is", {"text": "The median is the middle value of the sorted list.", "audio": "uri:audio/median-intro"}),
        {
            "id": "Q2",
            "kind": "close_ended",
            "title": "Compute a median",
            "representations": {"text": "What is the median of 1, 2, 3, 4, 10?"},
            "max_attempts": None,
            "kind_data": {
                "prompt": "What is the median of 1, 2, 3, 4, 10?",
                "expected": {"value": 3, "tolerance": 1e-9},
                "distractors": {"4": "average_value"},
            },
        },
        lesson("RD", "Average vs median", {"text": "You computed the average. The median ignores magnitudes and takes the middle of the sorted values; outliers move the average but not the median."}),
        lesson("R2", "Medians, step by step", {"text": "Review: sort the values and take the middle one."}),
        {
            "id": "Z2",
            "kind": "quiz",
            "title": "Median check",
            "representations": {"text": "Two quick questions about medians."},
            "max_attempts": None,
            "kind_data": {
                "items": [
                    {"stem": "Median of 1, 9, 5?", "choices": ["1", "5", "9"], "correct": 1},
                    {"stem": "Median of 7, 7, 7?", "choices": ["0", "7", "21"], "correct": 1},
                ],
                "pass_threshold": 0.6,
            },
        },
        lesson("M", "Putting both together", {"text": "You now know the average, the median, and how they differ. Next: implement both."}),
        {
            "id": "C1",
            "kind": "coding",
            "title": "Implement average",
            "representations": {"code": "Write a function average(values) returning the arithmetic mean."},
            "max_attempts": None,
            "kind_data": {
                "statement": "Write a function average(values) returning the arithmetic mean.",
                "grader": {
                    "required_tokens": ["average"],
                    "forbidden_tokens": [],
                    "complexity_max": 10,
                    "branch_keywords": ["if", "else", "for", "while", "case", "&&", "||", "catch"],
                    "test_vectors": [],
                },
            },
        },
        {
            "id": "C2",
            "kind": "coding",
            "title": "Implement median",
            "representations": {"code": "Write a function median(values) returning the middle of the sorted values."},
            "max_attempts": None,
            "kind_data": {
                "statement": "Write a function median(values) returning the middle of the sorted values.",
                "grader": {
                    "required_tokens": ["median"],
                    "forbidden_tokens": [],
                    "complexity_max": 10,
                    "branch_keywords": ["if", "else", "for", "while", "case", "&&", "||", "catch"],
                    "test_vectors": [],
                },
            },
        },
    ],
    "edges": [
        edge("e.L1.Q1", "L1", "Q1", {"builtin": "always"}),
        edge("e.Q1.pass", "Q1", "L2", {"builtin": "pass"}),
        edge("e.Q1.fail", "Q1", "R1", {"builtin": "fail"}),
        edge("e.R1.Z1", "R1", "Z1", {"builtin": "always"}),
        edge("e.Z1.pass", "Z1", "L2", {"builtin": "pass"}),
        edge("e.Z1.fail", "Z1", "R1", {"builtin": "fail"}),
        edge("e.L2.Q2", "L2", "Q2", {"builtin": "always"}),
        edge("e.Q2.pass", "Q2", "M", {"builtin": "pass"}),
        edge("e.Q2.avg", "Q2", "RD", {"expr": 'label == "average_value"'}, "average_value"),
        edge("e.Q2.fail", "Q2", "R2", {"builtin": "fail"}),
        edge("e.RD.M", "RD", "M", {"builtin": "always"}),
        edge("e.R2.Z2", "R2", "Z2", {"builtin": "always"}),
        edge("e.Z2.pass", "Z2", "M", {"builtin": "pass"}),
        edge("e.Z2.fail", "Z2", "R2", {"builtin": "fail"}),
        edge("e.M.C1", "M", "C1", {"builtin": "always"}),
        edge("e.C1.C2", "C1", "C2", {"builtin": "pass"}),
    ],
}

MODEL_UNIFORM_05 = {
    "close_ended_pass": 0.5,
    "quiz_item_correct": 0.5,
    "coding_pass": 0.5,
    "answer_distributions": {
        "Q1": {"correct": 0.5, "other": 0.5},
        "Q2": {"correct": 0.5, "average_value": 0.25, "other": 0.25},
    },
    "review_nodes": ["R1", "R2", "RD"],
}

MODEL_ALL_PASS = {
    "close_ended_pass": 1.0,
    "quiz_item_correct": 1.0,
    "coding_pass": 1.0,
    "review_nodes": ["R1", "R2", "RD"],
}

RULEPACKS = [
    {
        "id": "core-rewards",
        "applies_to": ["lesson", "close_ended", "quiz", "coding"],
        "rules": [
            {"id": "activity-done", "trigger": "activity_completed", "award": {"points": 5}},
            {"id": "first-try", "trigger": "first_try_correct", "award": {"points": 10}},
            {"id": "on-a-roll", "trigger": "streak(3)", "award": {"points": 15, "badge": "on-a-roll"}},
            {"id": "finisher", "trigger": "session_completed", "award": {"points": 50, "badge": "finisher"}},
        ],
    },
    {
        "id": "coding-rewards",
        "applies_to": ["coding"],
        "rules": [
            {"id": "clean-code", "trigger": "activity_completed", "kind_filter": "coding", "award": {"points": 8}},
        ],
    },
]


def main():
    fixtures = ROOT / "fixtures"
    fixtures.mkdir(exist_ok=True)
    # round-trip through the model so the checked-in file is canonical bytes
    fragment = load_fragment(canonical_json(FIXTURE))
    (fixtures / "stats-avg-median.json").write_bytes(canonical_json(fragment_to_dict(fragment)))
    (fixtures / "model-uniform-05.json").write_bytes(canonical_json(MODEL_UNIFORM_05))
    (fixtures / "model-all-pass.json").write_bytes(canonical_json(MODEL_ALL_PASS))
    (fixtures / "rulepacks.json").write_bytes(canonical_json(RULEPACKS))
    print("fixtures written")


if __name__ == "__main__":
    main()
