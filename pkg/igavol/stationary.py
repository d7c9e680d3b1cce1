''' stationary laws of the volatility in the IGa and Heston models

	Both laws only depend on `β = 2κ/λ²` and on the mean reversion level `θ`, so `κ` and `λ` cannot be told apart from a stationary density.

	- IGa:  the volatility follows an inverse gamma law of shape `1+β` and scale `βθ`
	- Heston:  the variance follows a gamma law of shape `βθ` and scale `1/β`, so the volatility follows a generalized Chi law with `b = 1/√(2β)` and `ν = 2βθ`. Here `θ` is the mean reversion level of the variance.
'''

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln
from scipy.optimize import brentq

from .errors import DomainError


__all__ = ['IgaStationary', 'HestonVolStationary', 'iga_vol_density', 'heston_vol_density',
			'iga_vol_moments', 'heston_vol_moments', 'match_moments', 'feller_ratio',
			'stationary_from_params', 'DensityCurves', 'density_curves', 'FIGURE_TARGETS']


# (mean, standard deviation) pairs of the volatility compared across models
FIGURE_TARGETS = ((0.30, 0.08), (0.30, 0.16), (0.30, 0.24))

# Heston matching solves βθ in this range
MATCH_BRACKET = (1e-4, 1e4)


def _support(x):
	x = np.asarray(x, dtype=float)
	if np.any(x <= 0):
		raise DomainError('volatility densities are defined for positive volatilities only')
	return x

def _scalar(value):
	return value if np.ndim(value) else float(value)


def iga_vol_moments(beta:float, theta:float) -> tuple:
	''' `(mean, variance)` of the IGa stationary volatility, the variance is infinite for `β <= 1` '''
	if not (beta > 0 and theta > 0):
		raise DomainError('β and θ must be positive')
	return theta, (theta*theta / (beta - 1) if beta > 1 else math.inf)

def heston_vol_moments(beta:float, theta:float) -> tuple:
	''' `(mean, variance)` of the Heston stationary volatility

		The mean is `Γ(βθ+½) / (Γ(βθ) √(βθ)) √θ` and the second moment is `θ`
	'''
	if not (beta > 0 and theta > 0):
		raise DomainError('β and θ must be positive')
	mean = _gamma_ratio(beta*theta) * math.sqrt(theta)
	return mean, theta - mean*mean

def _gamma_ratio(k):
	return math.exp(gammaln(k + 0.5) - gammaln(k) - 0.5*math.log(k))


@dataclass(frozen=True)
class IgaStationary:
	''' stationary law of the IGa volatility

		Attributes:
			beta:   `2κ/λ²`
			theta:  mean reversion level of the volatility
	'''
	beta: float
	theta: float

	def __post_init__(self):
		if not (self.beta > 0 and self.theta > 0):
			raise DomainError('β and θ must be positive, got β={} θ={}'.format(self.beta, self.theta))

	@property
	def shape(self) -> float:
		return 1 + self.beta

	@property
	def scale(self) -> float:
		return self.beta * self.theta

	def logpdf(self, x):
		x = _support(x)
		a, s = self.shape, self.scale
		return _scalar(a*math.log(s) - gammaln(a) - (a+1)*np.log(x) - s/x)

	def pdf(self, x):
		return _scalar(np.exp(self.logpdf(x)))

	def moments(self) -> tuple:
		return iga_vol_moments(self.beta, self.theta)

	@property
	def mean(self) -> float:
		return self.moments()[0]

	@property
	def std(self) -> float:
		return math.sqrt(self.moments()[1])


@dataclass(frozen=True)
class HestonVolStationary:
	''' stationary law of the Heston volatility (square root of the variance)

		Attributes:
			beta:   `2κ/λ²`
			theta:  mean reversion level of the variance
	'''
	beta: float
	theta: float

	def __post_init__(self):
		if not (self.beta > 0 and self.theta > 0):
			raise DomainError('β and θ must be positive, got β={} θ={}'.format(self.beta, self.theta))

	@property
	def b(self) -> float:
		return 1 / math.sqrt(2*self.beta)

	@property
	def nu(self) -> float:
		return 2 * self.beta * self.theta

	@property
	def feller(self) -> float:
		''' the Feller quantity `2κθ/λ²`, the variance reaches 0 when it is below 1 '''
		return self.beta * self.theta

	def logpdf(self, x):
		x = _support(x)
		b, nu = self.b, self.nu
		return _scalar(- (nu/2 - 1)*math.log(2) - math.log(b) - gammaln(nu/2)
			+ (nu - 1)*np.log(x/b) - 0.5*(x/b)**2)

	def pdf(self, x):
		return _scalar(np.exp(self.logpdf(x)))

	def moments(self) -> tuple:
		return heston_vol_moments(self.beta, self.theta)

	@property
	def mean(self) -> float:
		return self.moments()[0]

	@property
	def std(self) -> float:
		return math.sqrt(self.moments()[1])


def iga_vol_density(params:IgaStationary, x):
	''' density of the IGa stationary volatility `β'^α/Γ(α) x^(-α-1) e^(-β'/x)`, evaluated in log space '''
	return params.pdf(x)

def heston_vol_density(params:HestonVolStationary, x):
	''' density of the Heston stationary volatility `1/(2^(ν/2-1) b Γ(ν/2)) (x/b)^(ν-1) e^(-½(x/b)²)`, evaluated in log space

		It diverges at 0 when `ν < 1` but stays integrable.
	'''
	return params.pdf(x)


def match_moments(model:str, mean:float, std:float):
	''' stationary law of the given model having the target mean and standard deviation

		Args:
			model:  `'iga'` or `'heston'`

		Returns:
			an `IgaStationary` or `HestonVolStationary`

		Example:

			>>> match_moments('iga', 0.30, 0.24)
			IgaStationary(beta=2.5625, theta=0.3)
			>>> round(match_moments('heston', 0.30, 0.24).feller, 2)
			0.49
	'''
	if not (mean > 0 and std > 0):
		raise DomainError('target mean and standard deviation must be positive, got {} and {}'.format(mean, std))
	model = model.lower()
	if model == 'iga':
		return IgaStationary(1 + mean*mean/(std*std), mean)
	elif model == 'heston':
		theta = mean*mean + std*std
		target = mean / math.sqrt(theta)
		lo, hi = MATCH_BRACKET
		if not _gamma_ratio(lo) < target < _gamma_ratio(hi):
			raise DomainError('no Heston stationary law with mean {} and standard deviation {}'.format(mean, std))
		feller = brentq(lambda k: _gamma_ratio(k) - target, lo, hi, xtol=1e-14, rtol=4*np.finfo(float).eps, maxiter=500)
		return HestonVolStationary(feller/theta, theta)
	else:
		raise DomainError('unknown model {}, expected iga or heston'.format(repr(model)))


def feller_ratio(kappa:float, theta:float, lam:float) -> float:
	''' `2κθ/λ²`

		Example:

			>>> round(feller_ratio(1.16, 0.0128, 0.32), 2)
			0.29
	'''
	if lam == 0:
		raise DomainError('the Feller ratio needs a non zero vol of vol')
	return 2*kappa*theta / (lam*lam)


def stationary_from_params(kappa:float, theta:float, lam:float, model:str='iga'):
	''' stationary law for model parameters, `θ` is a volatility level for IGa and a variance level for Heston '''
	if not lam > 0:
		raise DomainError('a stationary law needs a positive vol of vol')
	beta = 2*kappa / (lam*lam)
	if model == 'iga':		return IgaStationary(beta, theta)
	elif model == 'heston':	return HestonVolStationary(beta, theta)
	raise DomainError('unknown model {}, expected iga or heston'.format(repr(model)))


@dataclass(frozen=True)
class DensityCurves:
	''' densities of moment-matched IGa and Heston laws on a volatility grid '''
	mean: float
	std: float
	iga: IgaStationary
	heston: HestonVolStationary
	x: np.ndarray
	iga_density: np.ndarray
	heston_density: np.ndarray

	COLUMNS = ('x', 'iga_density', 'heston_density', 'iga_log_density', 'heston_log_density')

	def rows(self):
		''' rows of the curve table, in the order of `COLUMNS` '''
		with np.errstate(divide='ignore'):
			return np.column_stack([self.x, self.iga_density, self.heston_density,
				np.log(self.iga_density), np.log(self.heston_density)])

	def matched(self) -> dict:
		''' parameters of both laws, with the Heston Feller quantity '''
		return dict(
			mean = self.mean,
			std = self.std,
			iga_beta = self.iga.beta,
			iga_theta = self.iga.theta,
			heston_beta = self.heston.beta,
			heston_theta = self.heston.theta,
			feller = self.heston.feller,
			)

def density_curves(mean:float, std:float, points:int=2000, lower:float=1e-4, upper:float=1.2) -> DensityCurves:
	''' evaluate moment-matched IGa and Heston densities on a regular grid '''
	if not 0 < lower < upper or points < 2:
		raise DomainError('invalid density grid')
	iga = match_moments('iga', mean, std)
	heston = match_moments('heston', mean, std)
	x = np.linspace(lower, upper, points)
	return DensityCurves(mean, std, iga, heston, x, iga.pdf(x), heston.pdf(x))
