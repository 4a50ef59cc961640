"""Dataset manifests: CSV files with header path,id,label,role."""
from __future__ import annotations
import csv
from pathlib import Path
from dataclasses import dataclass
from typing import List, Set, Tuple, Union

from arsrg.enums import Role
from arsrg.exceptions import ArsrgIoError, ManifestError

HEADER = ('path', 'id', 'label', 'role')


@dataclass(frozen=True)
class ManifestEntry(object):
    path: Path
    image_id: str
    label: str
    role: Role


@dataclass(frozen=True)
class DatasetManifest(object):
    """Entries of a dataset, ids unique."""
    entries: Tuple[ManifestEntry, ...]

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def with_role(self, role: Role) -> List[ManifestEntry]:
        return [e for e in self.entries if e.role == role]

    def relevant_ids(self, query: ManifestEntry, candidates: List[ManifestEntry]) -> Set[str]:
        """Candidates relevant to a query: same non-empty label, or the same image file when unlabelled."""
        if query.label:
            return {c.image_id for c in candidates if c.label == query.label}
        return {c.image_id for c in candidates if c.path.resolve() == query.path.resolve()}


def load_manifest(path: Union[str, Path], check_paths: bool = True) -> DatasetManifest:
    """Parse a manifest, resolving entry paths against the manifest's directory.

    Args:
        path (str, Path): Manifest CSV.
        check_paths (bool): Fail on entries whose file does not exist.

    Returns:
        DatasetManifest: The entries in file order.

    Raises:
        ManifestError: With the offending line number.

    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ArsrgIoError(f'Could not read manifest {path}: {e}') from e
    reader = csv.reader(text.splitlines())
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != HEADER:
        raise ManifestError(f'Expected header "{",".join(HEADER)}"', 1)

    entries, seen = [], set()
    for line_no, row in enumerate(reader, start=2):
        if not row or not any(cell.strip() for cell in row):
            continue
        if len(row) != len(HEADER):
            raise ManifestError(f'Expected {len(HEADER)} columns, got {len(row)}', line_no)
        entry_path, image_id, label, role = (cell.strip() for cell in row)
        if not image_id:
            raise ManifestError('Empty id', line_no)
        if image_id in seen:
            raise ManifestError(f'Duplicate id "{image_id}"', line_no)
        try:
            role = Role.parse(role)
        except ValueError as e:
            raise ManifestError(str(e), line_no) from e
        resolved = Path(entry_path) if Path(entry_path).is_absolute() else path.parent / entry_path
        if check_paths and not resolved.is_file():
            raise ManifestError(f'No such file "{entry_path}"', line_no)
        seen.add(image_id)
        entries.append(ManifestEntry(resolved, image_id, label, role))
    return DatasetManifest(tuple(entries))
