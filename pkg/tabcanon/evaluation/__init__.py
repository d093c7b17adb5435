from .accuracy import content_accuracy
from .adjacency import adjacency_fscore, adjacency_relations
from .grits import CellMatrix, grits, grits_search

__all__ = ["content_accuracy", "adjacency_fscore", "adjacency_relations", "CellMatrix", "grits", "grits_search"]
