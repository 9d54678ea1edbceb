"""Local certification of treewidth and regular properties on bounded-treewidth graphs."""

__version__ = "0.1.0"
