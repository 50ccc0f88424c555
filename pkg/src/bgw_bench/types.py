from fractions import Fraction

import numpy as np

Point = np.ndarray[float]
Points = np.ndarray[float]
Values = np.ndarray[float]

MultiIndex = tuple[int, ...]

Rational = Fraction
Real = float | Fraction

Interval = tuple[float, float] | tuple[Fraction, Fraction]
