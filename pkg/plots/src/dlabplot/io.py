"""Reading the versioned experiment CSVs.

The contract: first line `# dlab-schema v1`, a `# subcommand <name>` comment,
optional further comments (`# config ...`), then a header row and data rows.
Readers fail closed on any mismatch and never modify inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

SCHEMA_LINE = "# dlab-schema v1"


class SchemaMismatch(Exception):
    pass


@dataclass
class Table:
    subcommand: str
    comments: list
    header: list
    rows: list  # list of dicts keyed by header

    def config_value(self, key, default=None):
        for line in self.comments:
            if line.startswith("# config "):
                for part in line[len("# config ") :].split():
                    k, _, v = part.partition("=")
                    if k == key:
                        return v
        return default


def read_table(path, expect_subcommand=None, expect_columns=None):
    with open(path) as fh:
        lines = [line.rstrip("\n") for line in fh]
    if not lines or lines[0] != SCHEMA_LINE:
        raise SchemaMismatch(f"{path}: missing schema line {SCHEMA_LINE!r}")
    comments = []
    header = None
    rows = []
    subcommand = None
    for line in lines[1:]:
        if not line:
            continue
        if line.startswith("#"):
            comments.append(line)
            if line.startswith("# subcommand "):
                subcommand = line[len("# subcommand ") :].strip()
            continue
        if header is None:
            header = line.split(",")
            continue
        cells = line.split(",")
        if len(cells) != len(header):
            raise SchemaMismatch(f"{path}: row width {len(cells)} != header {len(header)}")
        rows.append(dict(zip(header, cells)))
    if header is None:
        raise SchemaMismatch(f"{path}: no header row")
    if expect_subcommand is not None and subcommand != expect_subcommand:
        raise SchemaMismatch(
            f"{path}: subcommand {subcommand!r}, expected {expect_subcommand!r}"
        )
    if expect_columns is not None and header != list(expect_columns):
        raise SchemaMismatch(f"{path}: columns {header} != {list(expect_columns)}")
    return Table(subcommand, comments, header, rows)
