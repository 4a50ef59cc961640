"""Define Enums"""
from enum import Enum


class _StrEnum(Enum):
    """Enum comparing and hashing by value, so 'region' == LeafConfig.REGION is True."""

    def __eq__(self, other):
        if isinstance(other, str):
            return bool(self.value == other)
        else:
            return super().__eq__(other)

    def __hash__(self):
        return hash(self.value)

    def __str__(self):
        return self.value

    @property
    def nice_name(self) -> str:
        """Return the enum name capitalized with spaces. Eg REGION_GRAPH => Region graph.

        Returns:
            str: The enum name capitalized.

        """
        return self.name.replace('_', ' ').capitalize()

    @classmethod
    def parse(cls, value):
        """Look up a member by value, accepting members unchanged."""
        if isinstance(value, cls):
            return value
        for member in cls:
            if member.value == value:
                return member
        raise ValueError(f'"{value}" is not a valid {cls.__name__}, expected one of {[m.value for m in cls]}')


class LeafConfig(_StrEnum):
    """Leaf level configurations of an ARSRG.

    """
    REGION = 'region'  # Leaves hang from their region, no leaf edges
    REGION_GRAPH = 'region-graph'  # Leaves of each region also form a proximity graph (SNNG)


class Matcher(_StrEnum):
    """Graph comparison procedures.

    """
    REGION = 'region'  # Region by region ratio test with small region filtering
    GLOBAL = 'global'  # Whole image ratio test, ignores the graph structure


class Role(_StrEnum):
    """Roles of a dataset manifest entry.

    """
    QUERY = 'query'
    DATABASE = 'database'
    TRAIN = 'train'
    TEST = 'test'
