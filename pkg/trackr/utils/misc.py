"""misc.py

Various utility functions.
"""

from enum import Enum
from typing import TypeVar, Optional, Any, Type


class ContractViolation(ValueError):
    """Inputs that are individually valid but do not fit together
    (mismatched dimensions, misaligned lists, disjoint frame sets)."""
    pass


class ConfigError(ValueError):
    """Invalid configuration values."""
    pass


T = TypeVar('T')


def unwrap_optional(val: Optional[T]) -> T:
    """Covert a variable of type Optional[T] to T
    If the variable has value None a ValueError will be raised
    """
    if val is None:
        raise ValueError("Expected a not None value but got a None value.")
    return val


class AutoEnum(Enum):
    """Enum that with automatically incremented integer values.

    Allows to pass additional arguments in the class variables to the __init__
    method of the instances.
    See: https://stackoverflow.com/questions/19330460/how-do-i-put-docstrings-on-enums/19330461#19330461
    """

    def __new__(cls, *args: Any) -> "AutoEnum":
        """creating a new instance.

        :param args: will be passed to __init__.
        """
        value = len(cls.__members__) + 1
        obj = object.__new__(cls)
        obj._value_ = value
        return obj


L = TypeVar('L', bound='LabeledOptions')


class LabeledOptions(AutoEnum):
    """Enum with a label for each element. We can find the name from the label
    using :meth:`.fromLabel`.

    Example::

            >>> class Fusion(LabeledOptions):
            ...     hard = 'hard'
            ...     soft = 'soft'

    Here, ``Fusion.soft`` has value ``2`` and ``Fusion.fromLabel('Soft')``
    returns ``Fusion.soft``.
    """

    def __init__(self, label: str) -> None:
        self.label = label

    @classmethod
    def fromLabel(cls: Type[L], label: str) -> Optional[L]:
        """Find enum element from label."""
        for k in cls:
            if k.label.lower() == label.lower():
                return k
        return None

    @classmethod
    def parse(cls: Type[L], value: Any) -> L:
        """Accept an element or its label; raise :class:`ConfigError` for
        anything else."""
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            ret = cls.fromLabel(value)
            if ret is not None:
                return ret
        labels = ', '.join(k.label for k in cls)
        raise ConfigError(f"Unknown {cls.__name__} '{value}'; expected one of: {labels}.")
