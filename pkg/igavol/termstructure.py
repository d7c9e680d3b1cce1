''' time grids, piecewise-constant parameter schedules and rate curves

	Every time dependent input of the model is a step function on a `TimeGrid`: the interest rates (`RateCurve`) and the four stochastic parameters (`ParamSchedule`). Integrals of step functions are computed exactly by summing the overlaps with each interval, no quadrature is involved.

	All objects in this module are immutable and can be shared between threads.
'''

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError


__all__ = ['TENORS', 'tenor_years',
			'TimeGrid', 'StepFunction', 'RateCurve', 'ParamSchedule', 'Params', 'ModelState',
			'integrate_step', 'curve_from_equivalent_rates']


# year fractions of the quoted tenors, a convention: no business day or day count adjustment
TENORS = {
	'1W': 1/52,
	'2W': 2/52,
	'1M': 1/12,
	'2M': 2/12,
	'3M': 0.25,
	'6M': 0.5,
	'9M': 0.75,
	'1Y': 1.,
	'18M': 1.5,
	'2Y': 2.,
	}

def tenor_years(label:str) -> float:
	''' year fraction of a tenor label like `'3M'` or `'1Y'` '''
	try:
		return TENORS[label.upper()]
	except KeyError:
		raise DomainError('unknown tenor {}, expected one of {}'.format(repr(label), ', '.join(TENORS)))


@dataclass(frozen=True)
class TimeGrid:
	''' partition `0 = T_0 < T_1 < ... < T_N` of a time horizon, in years '''
	boundaries: tuple

	def __post_init__(self):
		boundaries = tuple(float(t) for t in self.boundaries)
		if len(boundaries) < 2:
			raise DomainError('a time grid needs at least one interval')
		if boundaries[0] != 0:
			raise DomainError('a time grid must start at 0, not {}'.format(boundaries[0]))
		if any(b <= a for a, b in zip(boundaries, boundaries[1:])):
			raise DomainError('time grid boundaries must be strictly increasing: {}'.format(boundaries))
		object.__setattr__(self, 'boundaries', boundaries)

	@classmethod
	def from_maturities(cls, maturities) -> 'TimeGrid':
		return cls((0., *maturities))

	def __len__(self):
		''' number of intervals '''
		return len(self.boundaries) - 1

	@property
	def end(self) -> float:
		return self.boundaries[-1]

	@property
	def maturities(self) -> tuple:
		return self.boundaries[1:]

	def intervals(self):
		''' iterate over `(start, end)` of each interval '''
		return zip(self.boundaries, self.boundaries[1:])

	def locate(self, t:float) -> int:
		''' index of the interval `[T_i, T_i+1[` containing `t`, the last interval is closed on the right '''
		if not 0 <= t <= self.end:
			raise DomainError('time {} out of grid range [0, {}]'.format(t, self.end))
		return min(int(np.searchsorted(self.boundaries, t, side='right')) - 1, len(self) - 1)

	def merge(self, *others, until:float=None) -> 'TimeGrid':
		''' grid of all boundaries from this grid and the given grids or times, cut at `until` (default: the end of this grid) '''
		if until is None:
			until = self.end
		points = set(self.boundaries)
		for other in others:
			if isinstance(other, TimeGrid):	points.update(other.boundaries)
			else:							points.update(np.atleast_1d(other).tolist())
		return TimeGrid((*sorted(t for t in points if t < until), until))


@dataclass(frozen=True)
class StepFunction:
	''' piecewise-constant function, right-continuous, taking `values[i]` on `[T_i, T_i+1[` '''
	grid: TimeGrid
	values: tuple

	def __post_init__(self):
		values = tuple(float(v) for v in self.values)
		if len(values) != len(self.grid):
			raise DomainError('expected {} values, one per interval, got {}'.format(len(self.grid), len(values)))
		if not all(map(math.isfinite, values)):
			raise DomainError('step function values must be finite')
		object.__setattr__(self, 'values', values)

	def __call__(self, t:float) -> float:
		return self.values[self.grid.locate(t)]

	def integral(self, t0:float, t1:float) -> float:
		return integrate_step(self, t0, t1)

	def on(self, grid:TimeGrid) -> np.ndarray:
		''' values taken on each interval of a finer grid, flat extension after the end '''
		starts = np.asarray(grid.boundaries[:-1])
		index = np.searchsorted(self.grid.boundaries, starts, side='right') - 1
		return np.asarray(self.values)[np.minimum(index, len(self.values) - 1)]


def integrate_step(curve:StepFunction, t0:float, t1:float) -> float:
	''' exact integral of a step function over `[t0, t1]`

		It is the sum of each interval value times the overlap of `[t0, t1]` with the interval.
	'''
	if not 0 <= t0 <= t1:
		raise DomainError('integration bounds must satisfy 0 <= t0 <= t1, got [{}, {}]'.format(t0, t1))
	if t1 > curve.grid.end:
		raise DomainError('integration bound {} beyond the curve end {}'.format(t1, curve.grid.end))
	boundaries = np.asarray(curve.grid.boundaries)
	overlap = np.clip(np.minimum(boundaries[1:], t1) - np.maximum(boundaries[:-1], t0), 0, None)
	return math.fsum(np.asarray(curve.values) * overlap)


class RateCurve(StepFunction):
	''' piecewise-constant short rate (1/years, possibly negative) '''

	@property
	def rates(self) -> tuple:
		return self.values

	def equivalent_rate(self, t:float) -> float:
		''' constant rate equivalent over `[0, t]`, ie. `1/t ∫_0^t r` '''
		if t <= 0:
			raise DomainError('equivalent rate needs a positive horizon, got {}'.format(t))
		return integrate_step(self, 0., t) / t


def curve_from_equivalent_rates(maturities, r_eq) -> RateCurve:
	''' piecewise-constant forward curve reproducing the given equivalent constant rates at each maturity

		The forward on `[T_i, T_i+1[` is `(r_eq(T_i+1) T_i+1 - r_eq(T_i) T_i) / (T_i+1 - T_i)` with `T_0 = 0`
	'''
	maturities = [float(t) for t in maturities]
	r_eq = [float(r) for r in r_eq]
	if len(maturities) != len(r_eq):
		raise DomainError('{} maturities but {} rates'.format(len(maturities), len(r_eq)))
	if not maturities or maturities[0] <= 0:
		raise DomainError('maturities must be positive')
	grid = TimeGrid.from_maturities(maturities)
	cumulated = [0., *(r*t for r, t in zip(r_eq, maturities))]
	forwards = [(b - a) / (tb - ta)
		for a, b, ta, tb in zip(cumulated, cumulated[1:], grid.boundaries, grid.boundaries[1:])]
	return RateCurve(grid, forwards)


class Params(NamedTuple):
	''' model parameters on one interval '''
	kappa: float
	theta: float
	lam: float
	rho: float


@dataclass(frozen=True)
class ParamSchedule:
	''' piecewise-constant term structure of the volatility parameters

		Attributes:
			grid:   the time grid
			kappa:  mean reversion rates (1/years, > 0)
			theta:  mean reversion levels of the volatility (> 0)
			lam:    volatilities of volatility (1/sqrt(years), >= 0)
			rho:    spot/volatility correlations, in `]-1, 1[`
	'''
	grid: TimeGrid
	kappa: tuple
	theta: tuple
	lam: tuple
	rho: tuple

	def __post_init__(self):
		for name in Params._fields:
			values = tuple(float(v) for v in getattr(self, name))
			if len(values) != len(self.grid):
				raise DomainError('{}: expected {} values, one per interval, got {}'.format(name, len(self.grid), len(values)))
			if not all(map(math.isfinite, values)):
				raise DomainError('{}: values must be finite'.format(name))
			object.__setattr__(self, name, values)
		if any(k <= 0 for k in self.kappa):	raise DomainError('kappa must be positive: {}'.format(self.kappa))
		if any(t <= 0 for t in self.theta):	raise DomainError('theta must be positive: {}'.format(self.theta))
		if any(l < 0 for l in self.lam):	raise DomainError('lambda must be non negative: {}'.format(self.lam))
		if any(abs(r) >= 1 for r in self.rho):	raise DomainError('rho must lie in ]-1, 1[: {}'.format(self.rho))

	@classmethod
	def from_table(cls, maturities, kappa, theta, lam, rho) -> 'ParamSchedule':
		''' schedule whose intervals end at the given maturities '''
		return cls(TimeGrid.from_maturities(maturities), kappa, theta, lam, rho)

	@classmethod
	def constant(cls, end:float, kappa:float, theta:float, lam:float, rho:float) -> 'ParamSchedule':
		return cls(TimeGrid((0., end)), (kappa,), (theta,), (lam,), (rho,))

	def __len__(self):
		return len(self.grid)

	def __getitem__(self, i) -> Params:
		''' parameters on interval `i` '''
		return Params(self.kappa[i], self.theta[i], self.lam[i], self.rho[i])

	def curve(self, name:str) -> StepFunction:
		''' one of the parameters as a step function, `name` in `Params._fields` '''
		return StepFunction(self.grid, getattr(self, name))

	def table(self) -> list:
		''' rows `(T_i+1, kappa, theta, lambda, rho)` '''
		return [(end, *self[i]) for i, (_, end) in enumerate(self.grid.intervals())]

	def until(self, end:float) -> 'ParamSchedule':
		''' restriction to `[0, end]`, the last parameters are extended flat if `end` is beyond the grid end '''
		if end <= 0:
			raise DomainError('horizon must be positive, got {}'.format(end))
		if end >= self.grid.end:
			count = len(self)
		else:
			count = self.grid.locate(end) + 1
			if self.grid.boundaries[count - 1] == end:
				count -= 1
		grid = TimeGrid((*self.grid.boundaries[:count], end))
		return ParamSchedule(grid, *(getattr(self, name)[:count] for name in Params._fields))

	def on(self, grid:TimeGrid) -> 'ParamSchedule':
		''' the same step functions expressed on a refined grid (flat extension beyond the end) '''
		return ParamSchedule(grid, *(self.curve(name).on(grid) for name in Params._fields))


@dataclass(frozen=True)
class ModelState:
	''' initial spot and volatility '''
	spot: float
	v0: float

	def __post_init__(self):
		if not self.spot > 0:	raise DomainError('spot must be positive, got {}'.format(self.spot))
		if not self.v0 > 0:		raise DomainError('initial volatility must be positive, got {}'.format(self.v0))

	@property
	def x0(self) -> float:
		return math.log(self.spot)
