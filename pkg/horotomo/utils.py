from logging import Logger, getLogger
from threading import Lock
from typing import Callable, Dict, Generic, Hashable, List, Optional, Tuple, TypeVar

import numpy as np
import numpy.typing as npt

FloatArray = npt.NDArray[np.float64]

logger: Logger = getLogger(__name__)

K = TypeVar("K", bound=Hashable)
V = TypeVar("V")


def parse_spec(text: str) -> Tuple[str, List[float]]:
    """Parses a parametrised name such as ``zonal-bump:0.0,2.0``, providing the name & its arguments

    :param text: The field description to parse
    :type text: str
    :raises ValueError: when an argument is not a number
    :returns: Tuple[str, List[float]]

    >>> parse_spec("zonal-exp:1.5")
    ('zonal-exp', [1.5])
    >>> parse_spec("shifted-bump")
    ('shifted-bump', [])
    """
    name, _, remainder = text.strip().partition(":")
    arguments = [float(value) for value in remainder.split(",") if value.strip()]
    return name.strip(), arguments


def format_float(value: Optional[float]) -> str:
    """Serialises a float with 17 significant digits, missing values become empty

    >>> format_float(0.1)
    '0.10000000000000001'
    >>> format_float(None)
    ''
    """
    if value is None:
        return ""
    return f"{float(value):.17g}"


def as_float_array(value: npt.ArrayLike) -> FloatArray:
    """Coerces the passed value to a float64 array"""
    return np.asarray(value, dtype=np.float64)


class MemoCache(Generic[K, V]):
    """A thread safe insert-once cache

    The first value stored for a key wins; concurrent producers of the same key may both compute but
    every reader observes the same value afterwards.
    """

    def __init__(self, name: str = "cache") -> None:
        self.name = name
        self._values: Dict[K, V] = {}
        self._lock = Lock()
        self.hits = 0
        self.misses = 0

    def get_or_insert(self, key: K, factory: Callable[[], V]) -> V:
        """Returns the cached value for key, producing it with factory when absent

        :param key: The key of the value
        :param factory: Produces the value when it is not cached yet
        :returns: The cached value
        """
        with self._lock:
            if key in self._values:
                self.hits += 1
                return self._values[key]
            self.misses += 1
        value = factory()
        with self._lock:
            stored = self._values.setdefault(key, value)
        logger.debug("%s stored key %s", self.name, key)
        return stored

    def __contains__(self, key: object) -> bool:
        with self._lock:
            return key in self._values

    def __len__(self) -> int:
        with self._lock:
            return len(self._values)
