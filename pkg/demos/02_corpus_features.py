"""Put a labeled corpus on disk, load it back, and build the
standardized matrix every model trains on.

The corpus here is generated, so the script is self-contained, but the
on-disk layout (an index of "<label> <path>" lines next to a data
directory) is exactly what real collections use.
"""

import tempfile

from headerscan import (Label, corpus_digest, extract_matrix, fit_scaler,
                        fit_schema, generate_emails, header_frequencies,
                        load_trec_index, prune_single_valued, top_k_fields)
from headerscan.features import apply_scaler
from headerscan.synthetic import write_trec


def main() -> None:
    emails = generate_emails(300, anomaly_fraction=0.4, seed=11)

    with tempfile.TemporaryDirectory() as scratch:
        index_path, root = write_trec(emails, scratch)
        records, report = load_trec_index(index_path, root)
        print(f"loaded {report.loaded} of {report.entries} index entries "
              f"({report.skipped} skipped)")
        print(f"corpus digest {corpus_digest(records)[:16]}...")

    spam = sum(1 for r in records if r.label is Label.SPAM)
    print(f"{spam} spam / {len(records) - spam} ham")

    stats = header_frequencies(records)
    print("\nmost common fields:")
    for name in top_k_fields(stats, 8):
        print(f"  {stats.doc_freq[name]:4d}  {name}")

    # census -> schema -> matrix; constant columns cannot standardize
    schema = fit_schema(records, k=40, one_hot=True)
    schema, matrix, dropped = prune_single_valued(
        schema, extract_matrix(records, schema))
    print(f"\n{len(schema.names)} features after dropping "
          f"{len(dropped)} single-valued columns")
    print(f"schema fingerprint {schema.fingerprint}")

    scaler = fit_scaler(matrix)
    X = apply_scaler(matrix, scaler)
    print(f"matrix {X.shape}, column means ~0: "
          f"{abs(X.mean(axis=0)).max():.2e}")

    print("\na few feature names:")
    for name in schema.names[:6]:
        print(f"  {name}")


if __name__ == "__main__":
    main()
