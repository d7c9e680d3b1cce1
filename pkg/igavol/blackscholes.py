''' Black-Scholes put kernel in (log-spot, integrated variance) coordinates

	The price of a put of strike `K` and maturity `T` when the log-spot is `x` and the integrated variance up to maturity is `y` writes

		P(x, y) = K e^-Dd N(d1) - e^(x-Df) N(d2)
		m = log(K e^-Dd) - x + Df,   d2 = m/√y - √y/2,   d1 = d2 + √y

	with `Dd`, `Df` the integrals of the domestic and foreign short rates over `[0, T]`.

	Derivatives in `y` follow from the derivatives in `x` by the heat equation identity

		∂P/∂y = ½ (∂²P/∂x² - ∂P/∂x)

	so every mixed greek `∂x^i ∂y^j P` for `j >= 1` is `A/(2√y)` times a polynomial in `q = 1 + d2/√y` and `1/y`, where `A = e^(x-Df) n(d2)`.

	Prices accept numpy arrays for `x` and `y` (the Monte Carlo estimator evaluates one kernel per path), greeks accept arrays for `x` and `y` as well.
'''

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import polynomial
from scipy.special import ndtr
from scipy.optimize import brentq

from .errors import DomainError
from .termstructure import RateCurve


__all__ = ['BsContext', 'GREEK_ORDERS', 'put_price_xy', 'call_price_xy', 'greek_xy', 'implied_vol', 'put_price', 'call_price']


GREEK_ORDERS = frozenset({(1,0), (2,0), (0,1), (1,1), (2,1), (0,2), (2,2)})

INV_SQRT_2PI = 1 / math.sqrt(2*math.pi)


@dataclass(frozen=True)
class BsContext:
	''' contract and discounting data of a vanilla option

		Attributes:
			strike:    strike price `K`
			maturity:  maturity `T` in years
			dd:        integral of the domestic short rate over `[0, T]`
			df:        integral of the foreign short rate over `[0, T]`
	'''
	strike: float
	maturity: float
	dd: float = 0.
	df: float = 0.

	def __post_init__(self):
		if not self.strike > 0:		raise DomainError('strike must be positive, got {}'.format(self.strike))
		if not self.maturity > 0:	raise DomainError('maturity must be positive, got {}'.format(self.maturity))
		if not (math.isfinite(self.dd) and math.isfinite(self.df)):
			raise DomainError('discount integrals must be finite')

	@classmethod
	def from_rates(cls, strike:float, maturity:float, r_d_eq:float=0., r_f_eq:float=0.) -> 'BsContext':
		''' context from the equivalent constant rates over `[0, maturity]` '''
		return cls(strike, maturity, r_d_eq*maturity, r_f_eq*maturity)

	@classmethod
	def from_curves(cls, strike:float, maturity:float, domestic:RateCurve, foreign:RateCurve) -> 'BsContext':
		return cls(strike, maturity, domestic.integral(0, maturity), foreign.integral(0, maturity))

	@property
	def discounted_strike(self) -> float:
		return self.strike * math.exp(-self.dd)

	def lower_bound(self, spot:float) -> float:
		''' lowest put price allowed by absence of arbitrage '''
		return max(self.discounted_strike - spot*math.exp(-self.df), 0.)

	def upper_bound(self, spot:float) -> float:
		''' highest put price allowed by absence of arbitrage '''
		return self.discounted_strike


def _scalar(value):
	return value if np.ndim(value) else float(value)

def _variance(y):
	y = np.asarray(y, dtype=float)
	if np.any(y < 0):
		raise DomainError('integrated variance must be non negative')
	return y

def _moneyness(ctx, x, y):
	''' returns `(s, d2, d1)` '''
	s = np.sqrt(y)
	m = math.log(ctx.strike) - ctx.dd + ctx.df - x
	d2 = m/s - 0.5*s
	return s, d2, d2 + s


def put_price_xy(ctx:BsContext, x, y):
	''' Black-Scholes put price for log-spot `x` and integrated variance `y`

		`y = 0` gives the discounted intrinsic value `max(K e^-Dd - e^(x-Df), 0)`

		Example:

			>>> ctx = BsContext(strike=100, maturity=1)
			>>> put_price_xy(ctx, math.log(100), 0.04)
			7.965567455405804
	'''
	x = np.asarray(x, dtype=float)
	y = _variance(y)
	kd = ctx.discounted_strike
	forward = np.exp(x - ctx.df)
	with np.errstate(divide='ignore', invalid='ignore'):
		s, d2, d1 = _moneyness(ctx, x, y)
		price = kd*ndtr(d1) - forward*ndtr(d2)
	return _scalar(np.where(y > 0, price, np.maximum(kd - forward, 0.)))

def call_price_xy(ctx:BsContext, x, y):
	''' call price by put-call parity '''
	return _scalar(np.asarray(put_price_xy(ctx, x, y)) + np.exp(np.asarray(x, dtype=float) - ctx.df) - ctx.discounted_strike)


@lru_cache(maxsize=None)
def _greek_polynomial(i:int, j:int) -> np.ndarray:
	''' coefficients `c[a, b]` of `q**a / y**b` such that `∂x^i ∂y^j P = A/(2√y) Σ c[a,b] q**a / y**b`, for `j >= 1` '''
	def derive(c):
		# ∂x (A p(q, u)) = A (q p - u ∂p/∂q)   since ∂A/∂x = A q and ∂q/∂x = -u
		out = np.zeros((c.shape[0]+1, c.shape[1]+1))
		out[1:, :-1] += c
		if c.shape[0] > 1:
			out[:c.shape[0]-1, 1:] -= polynomial.polyder(c, axis=0)
		return out
	def heat(c):
		first = derive(c)
		second = derive(first)
		first = np.pad(first, ((0, second.shape[0]-first.shape[0]), (0, second.shape[1]-first.shape[1])))
		return 0.5*(second - first)

	c = np.ones((1,1))
	for _ in range(i):		c = derive(c)
	for _ in range(j-1):	c = heat(c)
	c.flags.writeable = False
	return c

def greek_xy(ctx:BsContext, x, y, i:int, j:int):
	''' derivative `∂^(i+j) P / ∂x^i ∂y^j` of the put kernel

		Args:
			i:  order of derivation in `x`
			j:  order of derivation in `y`, `(i,j)` must belong to `GREEK_ORDERS`

		Example:

			>>> ctx = BsContext(strike=1.1, maturity=1)
			>>> dy = greek_xy(ctx, 0., 0.04, 0, 1)
			>>> dxx, dx = greek_xy(ctx, 0., 0.04, 2, 0), greek_xy(ctx, 0., 0.04, 1, 0)
			>>> abs(dy - 0.5*(dxx - dx)) < 1e-15
			True
	'''
	if (i, j) not in GREEK_ORDERS:
		raise DomainError('unsupported greek order {}, expected one of {}'.format((i, j), sorted(GREEK_ORDERS)))
	x = np.asarray(x, dtype=float)
	y = np.asarray(y, dtype=float)
	if np.any(y <= 0):
		raise DomainError('greeks need a positive integrated variance')
	forward = np.exp(x - ctx.df)
	s, d2, d1 = _moneyness(ctx, x, y)
	density = forward * INV_SQRT_2PI * np.exp(-0.5*d2*d2)
	if j == 0:
		delta = -forward * ndtr(d2)
		return _scalar(delta if i == 1 else delta + density/s)
	q = 1 + d2/s
	return _scalar(density/(2*s) * polynomial.polyval2d(q, 1/y, _greek_polynomial(i, j)))


def put_price(spot:float, strike:float, maturity:float, r_d_eq:float, r_f_eq:float, vol:float) -> float:
	''' textbook put price with constant volatility '''
	ctx = BsContext.from_rates(strike, maturity, r_d_eq, r_f_eq)
	return put_price_xy(ctx, math.log(spot), vol*vol*maturity)

def call_price(spot:float, strike:float, maturity:float, r_d_eq:float, r_f_eq:float, vol:float) -> float:
	''' textbook call price with constant volatility '''
	ctx = BsContext.from_rates(strike, maturity, r_d_eq, r_f_eq)
	return call_price_xy(ctx, math.log(spot), vol*vol*maturity)


def implied_vol(price:float, spot:float, strike:float, maturity:float, r_d_eq:float=0., r_f_eq:float=0., call:bool=False,
				bracket=(1e-6, 5.), iterations:int=200) -> float:
	''' annualized volatility reproducing the given option price

		Brent's method on the volatility, within `bracket`. The put price is increasing in the volatility so the root is unique.

		Args:
			price:   option price, put price unless `call` is set
			call:    if True, `price` is a call price, converted to a put by parity
			bracket: volatility range searched
			iterations:  maximum number of solver iterations

		Raises:
			DomainError:  if the price is not strictly within the no-arbitrage bounds, not attainable within the bracket, or if the solver did not converge
	'''
	ctx = BsContext.from_rates(strike, maturity, r_d_eq, r_f_eq)
	x = math.log(spot)
	if call:
		price = price - spot*math.exp(-ctx.df) + ctx.discounted_strike
	lower, upper = ctx.lower_bound(spot), ctx.upper_bound(spot)
	if not lower < price < upper:
		raise DomainError('price {} outside the no-arbitrage bounds ]{}, {}['.format(price, lower, upper))

	def residual(vol):
		return put_price_xy(ctx, x, vol*vol*maturity) - price

	lo, hi = bracket
	if residual(lo) > 0 or residual(hi) < 0:
		raise DomainError('price {} not attainable with a volatility in {}'.format(price, bracket))
	vol, status = brentq(residual, lo, hi, xtol=1e-15, rtol=4*np.finfo(float).eps, maxiter=iterations,
						full_output=True, disp=False)
	if not status.converged:
		raise DomainError('implied volatility of price {} did not converge: {}'.format(price, status.flag))
	return vol
