"""Versioned JSON documents: every file format in the package is a JSON object with "format" and "version"."""
import json
from pathlib import Path
from typing import Any, Union

from arsrg.exceptions import ArsrgIoError, FormatError
from arsrg.utils.arsrg_utils import atomic_write


def require(data: Any, key: str, path: str = '') -> Any:
    """Fetch a key from a decoded JSON object, raising a FormatError that names the field when missing.

    Args:
        data (Any): Decoded JSON object.
        key (str): Key to fetch.
        path (str): Path of data inside the document, used in the error.

    Returns:
        Any: The value.

    """
    field = f'{path}.{key}' if path else key
    if not isinstance(data, dict):
        raise FormatError('Expected an object', path or '<root>')
    if key not in data:
        raise FormatError('Missing field', field)
    return data[key]


def require_type(value: Any, types, field: str) -> Any:
    """Check a decoded value's type, bools are never accepted as numbers."""
    if isinstance(value, bool) and bool not in (types if isinstance(types, tuple) else (types,)):
        raise FormatError(f'Expected {types}, got bool', field)
    if not isinstance(value, types):
        raise FormatError(f'Expected {types}, got {type(value).__name__}', field)
    return value


class JsonDocument(object):
    """Base definition for an object persisted as a versioned JSON document.

    """
    format_name: str
    format_version: int

    def as_dict(self) -> dict:
        """Return the document body, without the format and version keys.

        """
        raise NotImplementedError('Must define in a subclass')

    @classmethod
    def from_dict(cls, data: dict):
        """Factory method to construct from a decoded document body.

        """
        raise NotImplementedError('Must define in a subclass')

    def as_json_bytes(self) -> bytes:
        """Returns the instance data as JSON encoded bytes.

        Returns:
            bytes: JSON encoded bytes, keys in a fixed order so equal objects encode identically.

        """
        document = {'format': self.format_name, 'version': self.format_version}
        document.update(self.as_dict())
        return json.dumps(document, allow_nan=False).encode()

    @classmethod
    def from_bytes(cls, stream_data: bytes):
        """Factory method to construct from JSON encoded bytes.

        Args:
            stream_data (bytes): JSON encoded bytes.

        Returns:
            The decoded instance.

        Raises:
            FormatError: If the bytes are not a well formed document of this format.

        """
        try:
            data = json.loads(stream_data.decode() if isinstance(stream_data, bytes) else stream_data)
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise FormatError(f'Not a JSON document: {e}') from e
        if require(data, 'format') != cls.format_name:
            raise FormatError(f'Expected "{cls.format_name}", got "{data["format"]}"', 'format')
        if require(data, 'version') != cls.format_version:
            raise FormatError(f'Unsupported version {data["version"]}', 'version')
        return cls.from_dict(data)

    def write(self, path: Union[str, Path]) -> Path:
        """Atomically write the document to path.

        """
        try:
            return atomic_write(path, self.as_json_bytes())
        except OSError as e:
            raise ArsrgIoError(f'Could not write {path}: {e}') from e

    @classmethod
    def read(cls, path: Union[str, Path]):
        """Read a document from path.

        """
        try:
            data = Path(path).read_bytes()
        except OSError as e:
            raise ArsrgIoError(f'Could not read {path}: {e}') from e
        return cls.from_bytes(data)
