"""Write the soundness corpus to programs/<name>.sdpl."""
import argparse
from pathlib import Path

from sdpl.corpus import SOURCES


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "programs"))
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, (source, _) in sorted(SOURCES.items()):
        (out / f"{name}.sdpl").write_text(source)
    print(f"wrote {len(SOURCES)} programs to {out}")


if __name__ == "__main__":
    main()
