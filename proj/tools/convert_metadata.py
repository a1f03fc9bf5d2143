#!/usr/bin/env python3
"""Convert Mocheg or Factify2 CSV metadata into normalized instance JSONL.

One JSON object per output line:
  {id, claim, evidence, claim_image, evidence_images, raw_label, dataset, split}

Column names differ between releases of both datasets, so every column is
a flag. Image columns hold a single path; --evidence-image-dir globs all
images whose file name starts with the instance id instead.
"""

import argparse
import csv
import glob
import json
import os
import sys


def parse_args(argv):
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--dataset", required=True, choices=["mocheg", "factify2"])
    p.add_argument("--split", required=True, choices=["train", "val", "test"])
    p.add_argument("--csv", required=True, help="source metadata CSV")
    p.add_argument("--out", required=True, help="output JSONL")
    p.add_argument("--id-column", default="claim_id")
    p.add_argument("--claim-column", default="Claim")
    p.add_argument("--evidence-column", default="Evidence")
    p.add_argument("--label-column", default="cleaned_truthfulness")
    p.add_argument("--claim-image-column", default=None)
    p.add_argument("--evidence-image-column", default=None)
    p.add_argument("--evidence-image-dir", default=None)
    p.add_argument("--delimiter", default=",")
    return p.parse_args(argv)


def evidence_images(row, args, instance_id):
    if args.evidence_image_column and row.get(args.evidence_image_column):
        return [row[args.evidence_image_column]]
    if args.evidence_image_dir:
        return sorted(glob.glob(os.path.join(args.evidence_image_dir, f"{instance_id}-*")))
    return []


def convert(args):
    seen = {}
    with open(args.csv, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f, delimiter=args.delimiter)
        for n, row in enumerate(reader, start=2):
            try:
                instance_id = row[args.id_column].strip()
                record = {
                    "id": instance_id,
                    "claim": row[args.claim_column],
                    "evidence": row.get(args.evidence_column) or "",
                    "claim_image": (row.get(args.claim_image_column) or None) if args.claim_image_column else None,
                    "evidence_images": evidence_images(row, args, instance_id),
                    "raw_label": row[args.label_column].strip(),
                    "dataset": args.dataset,
                    "split": args.split,
                }
            except KeyError as e:
                sys.exit(f"{args.csv}:{n}: missing column {e}")
            # Mocheg lists one row per evidence paragraph; merge them per claim.
            if instance_id in seen:
                prev = seen[instance_id]
                if record["evidence"] and record["evidence"] not in prev["evidence"]:
                    prev["evidence"] = (prev["evidence"] + " " + record["evidence"]).strip()
                for img in record["evidence_images"]:
                    if img not in prev["evidence_images"]:
                        prev["evidence_images"].append(img)
            else:
                seen[instance_id] = record
    with open(args.out, "w", encoding="utf-8") as out:
        for record in seen.values():
            out.write(json.dumps(record, ensure_ascii=False) + "\n")
    print(f"wrote {len(seen)} instances to {args.out}")


if __name__ == "__main__":
    convert(parse_args(sys.argv[1:]))
