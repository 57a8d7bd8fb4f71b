"""
Error Types
Exceptions and warnings raised by the community detection pipeline
"""

from typing import List, Optional


class CommunityDetectionError(Exception):
    """Base class for all pipeline errors"""


class ConfigError(CommunityDetectionError):
    """Invalid experiment configuration file"""


class RankDeficientError(CommunityDetectionError):
    """
    The (sub)graph cannot support K communities: the K-th singular value
    (or |eigenvalue|) fell below the rank tolerance.
    """

    def __init__(self, message: str, worker_id: Optional[int] = None):
        self.message = message
        self.worker_id = worker_id
        if worker_id is not None:
            message = f"worker {worker_id}: {message}"
        super().__init__(message)

    def __reduce__(self):
        # joblib ships exceptions back from loky processes
        return (self.__class__, (self.message, self.worker_id))


class EigenSolverError(CommunityDetectionError):
    """Iterative eigensolver did not converge or failed its residual check"""


class EmptyClusterError(CommunityDetectionError):
    """k-means could not produce K non-empty clusters"""


class InvalidCentersError(CommunityDetectionError):
    """Pseudo-center indices are not valid positions within the pilot set"""


class InvalidPartitionError(CommunityDetectionError):
    """Partition plan is inconsistent with the graph or the requested proportions"""


class InvalidProportionsError(CommunityDetectionError, ValueError):
    """Unbalanced proportion parameters produce a non-positive entry"""


class DegenerateDensityError(CommunityDetectionError, ZeroDivisionError):
    """Relative density is undefined for the given labels"""


class GraphParseError(CommunityDetectionError):
    """Malformed line in an edge-list or labels file"""

    def __init__(self, path: str, line_number: int, line: str, reason: str = "expected two node ids"):
        self.path = path
        self.line_number = line_number
        self.line = line
        self.reason = reason
        super().__init__(f"{path}:{line_number}: {reason}: {line!r}")

    def __reduce__(self):
        return (self.__class__, (self.path, self.line_number, self.line, self.reason))


class EmptyGraphError(CommunityDetectionError):
    """Edge list produced no edges"""


class MissingLabelError(CommunityDetectionError):
    """Labels file does not cover every node of the graph"""

    def __init__(self, missing_ids: List[int]):
        self.missing_ids = list(missing_ids)
        shown = ", ".join(str(i) for i in self.missing_ids[:20])
        more = "" if len(self.missing_ids) <= 20 else f" (+{len(self.missing_ids) - 20} more)"
        super().__init__(f"no label for node ids: {shown}{more}")

    def __reduce__(self):
        return (self.__class__, (self.missing_ids,))


class CenterCollisionWarning(UserWarning):
    """Two master clusters selected the same nearest pilot"""


class ExactEmbeddingWarning(UserWarning):
    """Estimated embedding matches the population one exactly (LEE is -inf)"""
