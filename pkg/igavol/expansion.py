''' second order vol-of-vol expansion of vanilla prices in the IGa model

	The put price is expanded around the Black-Scholes price taken with the integrated variance of the deterministic volatility path `v0_t` (the path followed when the vol-of-vol is zero)

		P ≈ P_BS(x0, ψ) + a0 ∂yP + a1 ∂x∂yP + a2 ∂x²∂yP + b0 ∂y²P + b2 ∂x²∂y²P

	with greeks of the Black-Scholes kernel evaluated at `(x0, ψ)`. The coefficients are nested time integrals

		ω^{(n_k κ, l_k v0^p_k), ..., (n_1 κ, l_1 v0^p_1)}_{t,T} = ∫_t^T e^{n_k ∫_0^u κ} l_k(u) v0_u^p_k ω^{(n_k-1 ...), ...}_{u,T} du

	that are computed exactly for piecewise-constant parameters: `omega_advance` carries the integrals from one grid boundary to the next, each increment being a product of lower order integrals by `phi` terms, nested integrals over a single interval that reduce to elementary functions by recursion on their indices.

	Keys are tuples listing the outermost integral first:

	- omega keys:  `((n, label, p), ...)`  with label naming the piecewise-constant factor `l`, in `LABELS`
	- phi keys:    `((n, m, p), ...)` for the integrand `e^{n κ ΔT γ} γ^m v0^p`  with `γ = (s - T_i)/ΔT` the reduced time in the interval
'''

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .termstructure import ParamSchedule, ModelState, Params
from .blackscholes import BsContext, put_price_xy, greek_xy


__all__ = ['LABELS', 'COEFFICIENT_KEYS', 'KAPPA_MIN',
			'v0_at', 'Interval', 'phi',
			'OmegaState', 'omega_start', 'omega_advance', 'omega_states',
			'ExpansionCoefficients', 'coefficients', 'coefficients_from_omega',
			'expansion_terms', 'price_put_expansion', 'price_call_expansion']


# the piecewise-constant factors appearing in the coefficients, as functions of the interval parameters
LABELS = {
	'one': lambda params: 1.,
	'lambda2': lambda params: params.lam**2,
	'rho_lambda': lambda params: params.rho * params.lam,
	'two_rho_lambda': lambda params: 2 * params.rho * params.lam,
	}

PSI = ((0, 'one', 2),)
A0 = ((2, 'lambda2', 2), (-2, 'one', 0))
A1 = ((1, 'rho_lambda', 2), (-1, 'one', 1))
A2_FIRST = ((1, 'rho_lambda', 2), (0, 'two_rho_lambda', 1), (-1, 'one', 1))
A2_SECOND = ((1, 'rho_lambda', 2), (1, 'rho_lambda', 2), (-2, 'one', 0))
B0 = ((2, 'lambda2', 2), (-1, 'one', 1), (-1, 'one', 1))

COEFFICIENT_KEYS = dict(psi=PSI, a0=A0, a1=A1, a2_first=A2_FIRST, a2_second=A2_SECOND, b0=B0)

# below this mean reversion rate, the closed forms dividing by n κ lose all precision
KAPPA_MIN = 1e-8


def v0_at(schedule:ParamSchedule, v0:float, t:float) -> float:
	''' deterministic volatility path `v0_t`, solution of `dv = κ (θ - v) dt` started at `v0`

		On each interval it relaxes exponentially toward `θ_i`:  `v0_t = θ_i + (v0_{T_i} - θ_i) e^{-κ_i (t - T_i)}`

		Example:

			>>> schedule = ParamSchedule.constant(1., kappa=2., theta=0.1, lam=1., rho=0.)
			>>> v0_at(schedule, 0.2, 0.5)   # 0.1 + 0.1/e
			0.13678794411714424
	'''
	if not 0 <= t <= schedule.grid.end:
		raise DomainError('time {} out of schedule range [0, {}]'.format(t, schedule.grid.end))
	v = v0
	for i, (start, end) in enumerate(schedule.grid.intervals()):
		if start >= t:
			break
		kappa, theta, _, _ = schedule[i]
		v = theta + (v - theta) * math.exp(-kappa * (min(end, t) - start))
	return v


def _check_phi_key(key):
	if not isinstance(key, tuple) or not key:
		raise DomainError('a phi key must be a non empty tuple of (n, m, p) triples, got {}'.format(key))
	for item in key:
		if not (isinstance(item, tuple) and len(item) == 3 and all(isinstance(v, (int, np.integer)) for v in item)):
			raise DomainError('malformed phi key item {}, expected an integer triple (n, m, p)'.format(item))
		if item[1] < 0 or item[2] < 0:
			raise DomainError('phi key indices m and p must be non negative, got {}'.format(item))


@dataclass(frozen=True)
class Interval:
	''' one interval `[start, end]` of a piecewise-constant schedule, with the deterministic volatility `v_start` at its start

		Computed `phi` values are memoized on the instance, an instance must therefore not be shared between unrelated computations that could concurrently fill its cache (the values themselves do not depend on the order of evaluation).
	'''
	start: float
	end: float
	kappa: float
	theta: float
	v_start: float
	cache: dict = field(default_factory=dict, compare=False, repr=False)

	def __post_init__(self):
		if not self.end > self.start:
			raise DomainError('empty interval [{}, {}]'.format(self.start, self.end))
		if not self.kappa >= KAPPA_MIN:
			raise DomainError('mean reversion rate {} too small for the closed form integrals, minimum is {}'.format(self.kappa, KAPPA_MIN))

	@property
	def duration(self) -> float:
		return self.end - self.start

	def reduced(self, t:float) -> float:
		''' reduced time `γ(t) = (t - start) / duration` '''
		if not self.start <= t <= self.end:
			raise DomainError('time {} out of interval [{}, {}]'.format(t, self.start, self.end))
		return (t - self.start) / self.duration

	def v0(self, t:float) -> float:
		return self.theta + (self.v_start - self.theta) * math.exp(-self.kappa * (t - self.start))

	def phi(self, key:tuple, t:float=None) -> float:
		''' nested integral over `[t, end]` described by `key`, `t` defaults to the interval start '''
		key = tuple(tuple(item) for item in key)
		_check_phi_key(key)
		return self._phi(key, 0. if t is None else self.reduced(t))

	def _phi(self, key, g):
		found = self.cache.get((key, g))
		if found is None:
			found = self.cache[(key, g)] = self._reduce(key, g)
		return found

	def _reduce(self, key, g):
		(n, m, p), tail = key[0], key[1:]
		# lower the power of v0 through  v0_s = θ + (v_start - θ) e^{-κ ΔT γ}
		if p > 0:
			return (self.theta * self._phi(((n, m, p-1), *tail), g)
				+ (self.v_start - self.theta) * self._phi(((n-1, m, p-1), *tail), g))
		dt = self.duration
		if not tail:
			if n == 0:
				return dt / (m+1) * (1 - g**(m+1))
			nk = n * self.kappa
			a = nk * dt
			if m == 0:
				return math.exp(a*g) * math.expm1(a*(1-g)) / nk
			return (math.exp(a) - g**m * math.exp(a*g)) / nk - m/a * self._phi(((n, m-1, 0),), g)
		# integration by parts against the inner integral
		(n1, m1, p1), rest = tail[0], tail[1:]
		inner = self._phi(tail, g)
		if n == 0:
			return dt / (m+1) * (self._phi(((n1, m+m1+1, p1), *rest), g) - g**(m+1) * inner)
		nk = n * self.kappa
		a = nk * dt
		if m == 0:
			return (self._phi(((n+n1, m1, p1), *rest), g) - math.exp(a*g) * inner) / nk
		weights = [math.factorial(m) // math.factorial(j) * (-1/a)**(m-j)  for j in range(m+1)]
		merged = math.fsum(w * self._phi(((n+n1, m1+j, p1), *rest), g)  for j, w in enumerate(weights))
		boundary = math.exp(a*g) * math.fsum(w * g**j  for j, w in enumerate(weights))
		return (merged - boundary * inner) / nk


def phi(interval:Interval, key:tuple, t:float=None) -> float:
	''' nested integral `φ^{(n_k, m_k, p_k), ..., (n_1, m_1, p_1)}_{t, T_i+1}` over a schedule interval

		Args:
			interval:  the interval with its parameters and the deterministic volatility at its start
			key:       integer triples `(n, m, p)`, outermost integral first
			t:         lower bound of the outermost integral, in the interval (default to its start)

		Example:

			>>> interval = Interval(0., 0.5, kappa=2., theta=0.1, v_start=0.2)
			>>> phi(interval, ((0, 3, 0),))    # ΔT / (m+1)
			0.125
	'''
	return interval.phi(key, t)


@dataclass(frozen=True)
class OmegaState:
	''' the nested integrals needed by the coefficients, integrated from 0 to `time`

		Attributes:
			time:     upper bound reached
			v0:       deterministic volatility `v0_t` at `time`
			log_e:    `∫_0^time κ`, the logarithm of the discount-like factor `e_{0,time}`
			values:   integral value for each tracked omega key (every prefix of the coefficient keys)
	'''
	time: float
	v0: float
	log_e: float
	values: dict

	def __getitem__(self, key):
		return self.values[key]


def _tracked_keys():
	keys = set()
	for key in COEFFICIENT_KEYS.values():
		keys.update(key[:j] for j in range(1, len(key)+1))
	return sorted(keys, key=len)

TRACKED = _tracked_keys()


def omega_start(v0:float) -> OmegaState:
	''' integrals over the empty interval `[0, 0]` '''
	if not v0 > 0:
		raise DomainError('initial volatility must be positive, got {}'.format(v0))
	return OmegaState(0., float(v0), 0., {key: 0. for key in TRACKED})

def omega_advance(state:OmegaState, end:float, params:Params) -> OmegaState:
	''' extend the integrals of `state` over the interval `[state.time, end]` where the parameters are constant

		For a key `K = (k_1, ..., k_n)` (outermost first) the increment splits the nested domain at `state.time`

			ω_K(end) = Σ_{j<n}  ω_{k_1..k_j}(state.time) e_{0,state.time}^{Σ n(k_j+1..)} Π l(k_j+1..) φ^{k_j+1..}  +  ω_K(state.time)

		the empty prefix having value 1.
	'''
	if not end > state.time:
		raise DomainError('interval end {} must be after the state time {}'.format(end, state.time))
	params = Params(*params)
	interval = Interval(state.time, end, params.kappa, params.theta, state.v0)
	factors = {label: compute(params)  for label, compute in LABELS.items()}

	values = {}
	for key in TRACKED:
		terms = [state.values[key]]
		for j in range(len(key)):
			outer = state.values[key[:j]] if j else 1.
			segment = key[j:]
			if outer == 0:
				continue
			amplitude = math.prod(factors[label] for _, label, _ in segment)
			if amplitude == 0:
				continue
			shift = sum(n for n, _, _ in segment)
			terms.append(outer * math.exp(shift * state.log_e) * amplitude
				* interval.phi(tuple((n, 0, p) for n, _, p in segment)))
		values[key] = math.fsum(terms)

	return OmegaState(
		time = end,
		v0 = interval.v0(end),
		log_e = state.log_e + params.kappa * interval.duration,
		values = values,
		)

def omega_states(schedule:ParamSchedule, v0:float) -> list:
	''' omega states at each boundary of the schedule grid, starting with the state at 0 '''
	states = [omega_start(v0)]
	for i, (_, end) in enumerate(schedule.grid.intervals()):
		states.append(omega_advance(states[-1], end, schedule[i]))
	return states


@dataclass(frozen=True)
class ExpansionCoefficients:
	''' coefficients of the second order expansion for one horizon

		Attributes:
			psi:  integrated variance of the deterministic volatility path
			a0, a1, a2, b0:  coefficients of the greeks `∂y`, `∂x∂y`, `∂x²∂y`, `∂y²`
			b2:   coefficient of `∂x²∂y²`, always `a1²/2`
	'''
	psi: float
	a0: float
	a1: float
	a2: float
	b0: float
	b2: float = field(init=False)

	def __post_init__(self):
		object.__setattr__(self, 'b2', self.a1**2 / 2)

	def items(self):
		return (('psi', self.psi), ('a0', self.a0), ('a1', self.a1), ('a2', self.a2), ('b0', self.b0), ('b2', self.b2))


def coefficients_from_omega(state:OmegaState) -> ExpansionCoefficients:
	return ExpansionCoefficients(
		psi = state[PSI],
		a0 = state[A0],
		a1 = 2*state[A1],
		a2 = 2*(state[A2_FIRST] + state[A2_SECOND]),
		b0 = 4*state[B0],
		)

def coefficients(schedule:ParamSchedule, v0:float, T:float) -> ExpansionCoefficients:
	''' expansion coefficients for the horizon `T`

		The schedule is restricted to `[0, T]`, its last parameters extended flat when `T` is beyond its end.

		Example:

			>>> schedule = ParamSchedule.constant(1/12, kappa=4.19, theta=0.0639, lam=1.71, rho=-0.40)
			>>> c = coefficients(schedule, 0.0649, 1/12)
			>>> c.b2 == c.a1**2/2
			True
	'''
	if not T > 0:
		raise DomainError('horizon must be positive, got {}'.format(T))
	schedule = schedule.until(T)
	return coefficients_from_omega(omega_states(schedule, v0)[-1])


def expansion_terms(state:ModelState, schedule:ParamSchedule, ctx:BsContext, coefs:ExpansionCoefficients=None) -> dict:
	''' Black-Scholes part and each correction term of the expansion price of a put, by name '''
	if coefs is None:
		coefs = coefficients(schedule, state.v0, ctx.maturity)
	if not coefs.psi > 0:
		raise DomainError('the integrated variance of the deterministic path must be positive')
	x, y = state.x0, coefs.psi
	return dict(
		bs = put_price_xy(ctx, x, y),
		a0 = coefs.a0 * greek_xy(ctx, x, y, 0, 1),
		a1 = coefs.a1 * greek_xy(ctx, x, y, 1, 1),
		a2 = coefs.a2 * greek_xy(ctx, x, y, 2, 1),
		b0 = coefs.b0 * greek_xy(ctx, x, y, 0, 2),
		b2 = coefs.b2 * greek_xy(ctx, x, y, 2, 2),
		)

def price_put_expansion(state:ModelState, schedule:ParamSchedule, ctx:BsContext, coefs:ExpansionCoefficients=None) -> float:
	''' expansion price of a put

		Args:
			state:     spot and initial volatility
			schedule:  parameter term structure
			ctx:       strike, maturity and discounting
			coefs:     coefficients for `ctx.maturity` if already known, they are shared by all strikes of a maturity
	'''
	return math.fsum(expansion_terms(state, schedule, ctx, coefs).values())

def price_call_expansion(state:ModelState, schedule:ParamSchedule, ctx:BsContext, coefs:ExpansionCoefficients=None) -> float:
	''' expansion price of a call, by put-call parity '''
	put = price_put_expansion(state, schedule, ctx, coefs)
	return put + state.spot*math.exp(-ctx.df) - ctx.discounted_strike
