#!/usr/bin/env python3
"""Build the bundled 50-document mini-corpus and its mock-backend replies.

Writes into data/minicorpus/:
  seed_documents.jsonl    ingest file (includes a few documents the curation
                          stage must reject)
  extraction_replies.jsonl  {doc_id, reply} in the extraction grammar
  fixtures/rules.json     fallback replies for selection, synthesis, answers

Extraction fixtures keyed by prompt hash are produced afterwards with
`scogen mock-fixtures`, since the prompt text lives in the C++ code.
"""

import argparse
import json
import random
from pathlib import Path

SCENARIOS = {
    "Hospital Patient Readmission Risk Dashboard": {
        "stratum": "python",
        "dk": [
            ("Logistic Regression", "Estimate event probability from tabular clinical features",
             ("Regularized Fitting", "Tune L2 penalty with cross-validated grid search")),
            ("Survival Analysis", "Model time until readmission with censored follow-up data",
             ("Kaplan-Meier Estimation", "Compute survival curves stratified by patient cohort")),
            ("Class Imbalance", "Handle rare positive outcomes in clinical datasets",
             ("SMOTE Oversampling", "Synthesize minority samples between nearest neighbours")),
            ("Feature Scaling", "Bring lab values to comparable ranges before modelling", None),
        ],
        "cs": {
            "ps": ["Modular Data Pipeline", "Reproducible Experiment Tracking"],
            "tf": ["Pandas and Scikit-learn", "Plotly Dashboards"],
            "ad": ["Hash Map Grouping", "Sorting by Composite Keys"],
        },
    },
    "Retail Inventory Demand Forecasting Service": {
        "stratum": "python",
        "dk": [
            ("ARIMA Modeling", "Forecast weekly sales from autoregressive structure",
             ("AutoARIMA", "Select model orders automatically with information criteria")),
            ("Seasonal Decomposition", "Separate trend and seasonality in sales history",
             ("STL Decomposition", "Apply loess smoothing to extract seasonal components")),
            ("Feature Scaling", "Bring lab values to comparable ranges before modelling", None),
            ("Gradient Boosting", "Predict demand from calendar and price features",
             ("Early Stopping", "Halt boosting when validation error stops improving")),
        ],
        "cs": {
            "ps": ["Modular Data Pipeline", "Batch Job Scheduling"],
            "tf": ["Pandas and Scikit-learn", "Statsmodels Time Series API"],
            "ad": ["Sliding Window Aggregation", "Priority Queue Scheduling"],
        },
    },
    "Payment Gateway Fraud Alerting System": {
        "stratum": "javascript",
        "dk": [
            ("Anomaly Detection", "Flag transactions that deviate from customer history",
             ("Isolation Forest", "Score outliers by average path length in random trees")),
            ("Rate Limiting", "Bound request volume per merchant account",
             ("Token Bucket", "Refill request credits at a fixed rate with burst capacity")),
            ("Class Imbalance", "Handle rare positive outcomes in clinical datasets",
             ("SMOTE Oversampling", "Synthesize minority samples between nearest neighbours")),
        ],
        "cs": {
            "ps": ["Event-Driven Architecture", "Idempotent Request Handling"],
            "tf": ["Node.js Streams", "Redis Client Libraries"],
            "ad": ["Sliding Window Aggregation", "Bloom Filter Membership"],
        },
    },
    "Logistics Fleet Route Planning Tool": {
        "stratum": "python",
        "dk": [
            ("Vehicle Routing Problem", "Assign deliveries to trucks under capacity limits",
             ("Clarke-Wright Savings", "Merge routes greedily by pairwise distance savings")),
            ("Graph Shortest Paths", "Compute travel times over a road network",
             ("Dijkstra Search", "Expand the nearest unsettled node with a binary heap")),
            ("Geospatial Indexing", "Look up nearby depots from coordinates", None),
        ],
        "cs": {
            "ps": ["Greedy Heuristic Design", "Batch Job Scheduling"],
            "tf": ["NetworkX Graph Library", "OR-Tools Solver"],
            "ad": ["Priority Queue Scheduling", "Adjacency List Graphs"],
        },
    },
    "Online Classroom Plagiarism Checker": {
        "stratum": "javascript",
        "dk": [
            ("Text Similarity", "Compare student submissions for overlapping content",
             ("MinHash Sketching", "Estimate set overlap from compact random signatures")),
            ("Tokenization", "Split source code into normalized lexical units", None),
            ("Anomaly Detection", "Flag transactions that deviate from customer history",
             ("Isolation Forest", "Score outliers by average path length in random trees")),
        ],
        "cs": {
            "ps": ["Event-Driven Architecture", "Incremental Result Caching"],
            "tf": ["Node.js Streams", "Express Web Framework"],
            "ad": ["Bloom Filter Membership", "Rolling Hash Fingerprints"],
        },
    },
    "Warehouse Sensor Telemetry Reporting Database": {
        "stratum": "sql",
        "dk": [
            ("Time Series Downsampling", "Reduce high-frequency readings to hourly summaries",
             ("Window Functions", "Aggregate readings over ordered partitions")),
            ("Database Normalization", "Store sensors, sites and readings without redundancy", None),
            ("Seasonal Decomposition", "Separate trend and seasonality in sales history",
             ("STL Decomposition", "Apply loess smoothing to extract seasonal components")),
        ],
        "cs": {
            "ps": ["Incremental Result Caching", "Schema Migration Planning"],
            "tf": ["PostgreSQL", "Statsmodels Time Series API"],
            "ad": ["B-Tree Indexes", "Sliding Window Aggregation"],
        },
    },
    "Subscription Billing Revenue Reporting Module": {
        "stratum": "sql",
        "dk": [
            ("Revenue Recognition", "Spread subscription charges across service periods",
             ("Proration", "Split charges by days used within a billing cycle")),
            ("Cohort Analysis", "Track retention of customers grouped by signup month",
             ("Retention Matrices", "Pivot active counts by cohort and period offset")),
            ("Database Normalization", "Store sensors, sites and readings without redundancy", None),
        ],
        "cs": {
            "ps": ["Schema Migration Planning", "Reproducible Experiment Tracking"],
            "tf": ["PostgreSQL", "Pandas and Scikit-learn"],
            "ad": ["B-Tree Indexes", "Hash Map Grouping"],
        },
    },
}

CATEGORY_HEADINGS = [
    ("ps", "Problem-solving and Design Thinking"),
    ("tf", "Tools and Frameworks"),
    ("ad", "Algorithms and Data Structures"),
]

USAGE_VARIANTS = [
    "{u}",
    "{u} in a production service",
    "{u} for nightly batch reports",
]

CS_USAGES = [
    "Structure the code so each step can be tested on its own",
    "Keep per-request state small and bounded",
    "Combine with configuration files for repeatable runs",
]

WORDS = (
    "buffer cache client column commit config cursor dataset deploy driver endpoint "
    "export filter handler index ingest iterator join kernel lambda latency loader "
    "mapper merge metric module mutex offset parser partition payload pipeline "
    "plugin pointer query queue reader record reducer replica request resolver "
    "response retry router sample scheduler schema segment session shard signal "
    "socket snapshot stream summary table thread timeout token tracker trigger "
    "update validator vector window worker writer"
).split()


def prose(rng, sentences):
    out = []
    for _ in range(sentences):
        n = rng.randint(9, 16)
        words = [rng.choice(WORDS) for _ in range(n)]
        words[0] = words[0].capitalize()
        out.append(" ".join(words) + ".")
    return " ".join(out)


def code_block(rng, stratum, ident):
    if stratum == "sql":
        return (f"SELECT {ident}_id, date_trunc('hour', ts) AS bucket, avg(value)\n"
                f"FROM {ident}_{rng.choice(WORDS)}\nGROUP BY 1, 2\nORDER BY bucket;")
    if stratum == "javascript":
        return (f"function {ident}{rng.randint(10, 99)}(events) {{\n"
                f"  return events.filter(e => e.{rng.choice(WORDS)} > {rng.randint(1, 500)});\n}}")
    return (f"def {ident}_{rng.choice(WORDS)}(df):\n"
            f"    return df.groupby('{rng.choice(WORDS)}').{rng.choice(['mean', 'sum', 'max'])}()")


def make_document(rng, idx, scenario, spec):
    ident = f"{rng.choice(WORDS)}{idx}"
    parts = [
        f"Question {idx}: how should the {scenario.lower()} handle this part of the code?",
        prose(rng, rng.randint(4, 7)),
        code_block(rng, spec["stratum"], ident),
        prose(rng, rng.randint(3, 6)),
    ]
    return "\n\n".join(parts)


def make_reply(rng, scenario, spec):
    k = rng.randint(1, min(3, len(spec["dk"])))
    knowledge = rng.sample(spec["dk"], k)
    lines = ["Application Scenario:", scenario, "", "Domain Knowledge:"]
    for i, (name, usage, _) in enumerate(knowledge, 1):
        lines.append(f"{i}. {name}: {rng.choice(USAGE_VARIANTS).format(u=usage)}")
    lines += ["", "Domain Skill:"]
    for i, (name, _, skill) in enumerate(knowledge, 1):
        lines.append(f"{i}. {name}:")
        if skill is None or rng.random() < 0.15:
            lines.append(f"{i}.1. NA")
        else:
            lines.append(f"{i}.1. {skill[0]}: {rng.choice(USAGE_VARIANTS).format(u=skill[1])}")
    lines += ["", "Coding Skill:"]
    for key, heading in CATEGORY_HEADINGS:
        lines.append(f"{heading}:")
        if key == "ad" and rng.random() < 0.1:
            lines.append("1. NA")
        else:
            lines.append(f"1. {rng.choice(spec['cs'][key])}: {rng.choice(CS_USAGES)}")
    return "\n".join(lines)


def rules():
    problem = (
        "Step-by-Step Thought Process:\n"
        "1. Pick a setting where every feature has a natural role.\n"
        "2. Tie the features together through one data flow.\n\n"
        "Real-World Coding Problem:\n"
        "A regional operations team needs a service that ingests daily records, applies the "
        "checks described by its analysts and reports the results. Implement the core module "
        "(reference {hash8}). The input is a CSV file with columns id, timestamp, value and "
        "category; for example `17,2024-03-01T10:00:00Z,42.5,north`. Return a summary table "
        "keyed by category."
    )
    selection = (
        "Step-by-Step Thought Process\n"
        "The first candidates fit one data flow.\n\n"
        "Selected Elements:\n\n"
        "Domain Knowledge: K1, K2, K3\n"
        "Domain Skill: S1, S2, S3\n"
        "Coding Skill: C1, C2, C3"
    )
    answer = (
        "```python\n"
        "import csv\n"
        "from collections import defaultdict\n\n"
        "def summarize(path):\n"
        "    totals = defaultdict(float)\n"
        "    with open(path, newline='') as f:\n"
        "        for row in csv.DictReader(f):\n"
        "            totals[row['category']] += float(row['value'])\n"
        "    return dict(totals)\n"
        "```\n"
        "Solution {hash8}."
    )
    return [
        {"contains": "You are a problem designer", "response": problem},
        {"contains": "three groups of feature descriptions", "response": selection},
        {"contains": "", "response": answer},
    ]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "data" / "minicorpus"))
    ap.add_argument("--seed", type=int, default=20240611)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    out = Path(args.out)
    (out / "fixtures").mkdir(parents=True, exist_ok=True)

    names = sorted(SCENARIOS)
    docs, replies = [], []
    for idx in range(1, 44):
        scenario = names[(idx - 1) % len(names)]
        spec = SCENARIOS[scenario]
        doc_id = f"doc-{idx:03d}"
        source = "forum-dump" if idx % 3 else "notebook"
        docs.append({"id": doc_id, "source": source, "stratum": spec["stratum"],
                     "text": make_document(rng, idx, scenario, spec)})
        replies.append({"doc_id": doc_id, "reply": make_reply(rng, scenario, spec)})

    # One reply the parser must reject (no Coding Skill section).
    bad = replies[5]["reply"]
    replies[5]["reply"] = bad.split("\nCoding Skill:")[0]

    # Documents curation must drop.
    docs.append({"id": "doc-044", "source": "forum-dump", "stratum": "python",
                 "text": "How do I reverse a list in Python?"})
    docs.append({"id": "doc-045", "source": "notebook", "stratum": "sql", "text": "SELECT 1;"})
    docs.append({"id": "doc-046", "source": "forum-dump", "stratum": docs[2]["stratum"],
                 "text": docs[2]["text"]})
    near = docs[7]["text"].rsplit(" ", 3)[0] + " extra words here."
    docs.append({"id": "doc-047", "source": "forum-dump", "stratum": docs[7]["stratum"], "text": near})
    garbled = "\ufffd" * 40 + docs[10]["text"]
    docs.append({"id": "doc-048", "source": "notebook", "stratum": "python", "text": garbled})
    cyr = ("Как правильно обработать исключение в этом коде и записать результат в журнал "
           "без потери данных при параллельной загрузке файлов. ") * 8
    docs.append({"id": "doc-049", "source": "forum-dump", "stratum": "python", "text": cyr})
    docs.append({"id": "doc-050", "source": "other", "stratum": "haskell",
                 "text": make_document(rng, 50, names[0], SCENARIOS[names[0]])})

    with open(out / "seed_documents.jsonl", "w", encoding="utf-8") as f:
        for d in docs:
            f.write(json.dumps(d, ensure_ascii=False, sort_keys=True) + "\n")
    with open(out / "extraction_replies.jsonl", "w", encoding="utf-8") as f:
        for r in replies:
            f.write(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n")
    with open(out / "fixtures" / "rules.json", "w", encoding="utf-8") as f:
        json.dump(rules(), f, indent=2, ensure_ascii=False)
        f.write("\n")


if __name__ == "__main__":
    main()
