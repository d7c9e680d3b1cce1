''' Monte Carlo pricing in the IGa model, used as a reference for the expansion

	Only the volatility is simulated. Conditionally on a volatility path, the log-spot is gaussian, so each path contributes the Black-Scholes price

		P_BS(x0 + ∫ρV dB - ½∫(ρV)² dt,  ∫(1-ρ²)V² dt)

	The volatility follows the strong solution of its SDE `V_t = (V_0 + ∫κθ Z_s ds) / Z_t` with the geometric brownian motion `Z_t = exp((κ + ½λ²)t - λB_t)`, discretized with a linearization of `log Z` on each step. That scheme keeps the volatility positive for any step size.

	Paths are simulated by batches of fixed size, each with its own random stream derived from `(seed, batch index)`. Batch statistics are reduced in batch order, so a result does not depend on the number of workers used.
'''

import math
import logging
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError
from .termstructure import ParamSchedule, ModelState
from .blackscholes import BsContext, put_price_xy
from .workers import map_ordered, BACKENDS


__all__ = ['McConfig', 'McEstimate', 'step_vol', 'exact_vol_path', 'terminal_vols',
			'mc_price_puts', 'mc_price_put', 'mc_price_call']

logger = logging.getLogger(__name__)

# below this magnitude, (1 - e^-δ)/δ is evaluated by its series
SERIES_THRESHOLD = 1e-10


@dataclass(frozen=True)
class McConfig:
	''' Monte Carlo settings

		Attributes:
			paths:           number of simulated paths
			steps_per_year:  time step density, each schedule interval gets at least one step
			seed:            root seed of the random streams
			antithetic:      simulate paths by pairs of opposite brownian increments, `paths` and `batch_size` must then be even
			batch_size:      paths per batch, a batch is the unit of randomness and of parallel work
			workers:         number of parallel workers for the batches
			backend:         `'thread'` or `'process'`
	'''
	paths: int = 200_000
	steps_per_year: float = 2920
	seed: int = 0
	antithetic: bool = True
	batch_size: int = 16384
	workers: int = 1
	backend: str = 'thread'

	def __post_init__(self):
		if self.paths < 1:				raise DomainError('at least one path is needed, got {}'.format(self.paths))
		if not self.steps_per_year > 0:	raise DomainError('steps per year must be positive')
		if self.batch_size < 2:			raise DomainError('batch size must be at least 2')
		if self.antithetic and (self.paths % 2 or self.batch_size % 2):
			raise DomainError('antithetic paths come by pairs, paths and batch size must be even, got {} and {}'.format(self.paths, self.batch_size))
		if self.workers < 1:			raise DomainError('at least one worker is needed')
		if self.backend not in BACKENDS:	raise DomainError('unknown backend {}, expected one of {}'.format(repr(self.backend), BACKENDS))

	@classmethod
	def reference_scale(cls, **kwargs) -> 'McConfig':
		''' 24 steps a day over a 365 days year and a million paths '''
		kwargs.setdefault('paths', 1_000_000)
		kwargs.setdefault('steps_per_year', 24*365)
		return cls(**kwargs)

	def replace(self, **kwargs) -> 'McConfig':
		return replace(self, **kwargs)

	def steps(self, duration:float) -> int:
		''' number of time steps for an interval of the given duration '''
		return max(1, math.ceil(duration * self.steps_per_year - 1e-9))

	def batches(self) -> list:
		''' path count of each batch '''
		full, last = divmod(self.paths, self.batch_size)
		return [self.batch_size]*full + ([last] if last else [])


@dataclass(frozen=True)
class McEstimate:
	''' Monte Carlo estimate of a price

		Attributes:
			price:   sample mean
			stderr:  standard error of the mean
			paths:   number of simulated paths
	'''
	price: float
	stderr: float
	paths: int

	def __str__(self):
		return '{:.10g} ± {:.3g} ({} paths)'.format(self.price, self.stderr, self.paths)


def step_vol(v, kappa, theta, lam, dt, db):
	''' one step of the volatility scheme

		Args:
			v:   volatility at the step start (arrays accepted)
			dt:  step duration
			db:  brownian increment over the step
	'''
	delta = (kappa + 0.5*lam*lam)*dt - lam*np.asarray(db)
	small = np.abs(delta) < SERIES_THRESHOLD
	with np.errstate(divide='ignore', invalid='ignore'):
		ratio = np.where(small, 1 - 0.5*delta, -np.expm1(-delta) / np.where(small, 1., delta))
	result = v*np.exp(-delta) + kappa*theta*ratio*dt
	return result if np.ndim(result) else float(result)


def exact_vol_path(v0:float, kappa:float, theta:float, lam:float, dt:float, db) -> np.ndarray:
	''' strong solution of the volatility SDE with constant parameters, on the grid of the given brownian increments

		The time integral of `Z` is computed by trapezoids on the increments grid, so the result is a reference only when `dt` is much smaller than the steps it is compared to.

		Args:
			db:  brownian increments, the last axis is time

		Returns:
			volatilities at each grid time, including the start
	'''
	db = np.asarray(db, dtype=float)
	n = db.shape[-1]
	times = dt*np.arange(n+1)
	brownian = np.concatenate([np.zeros(db.shape[:-1]+(1,)), np.cumsum(db, axis=-1)], axis=-1)
	z = np.exp((kappa + 0.5*lam*lam)*times - lam*brownian)
	integral = np.concatenate([np.zeros(db.shape[:-1]+(1,)), np.cumsum(0.5*dt*(z[...,1:] + z[...,:-1]), axis=-1)], axis=-1)
	return (v0 + kappa*theta*integral) / z


def _stream(seed:int, batch:int) -> np.random.Generator:
	return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(batch,))))

@dataclass
class _Paths:
	''' path quantities accumulated by a batch '''
	vol: np.ndarray			# terminal volatility
	stochastic: np.ndarray	# ∫ρV dB
	drift: np.ndarray		# ∫(ρV)² dt
	variance: np.ndarray	# ∫(1-ρ²)V² dt

def _simulate_batch(schedule:ParamSchedule, v0:float, cfg:McConfig, batch:int, count:int) -> _Paths:
	rng = _stream(cfg.seed, batch)
	draws = count//2 if cfg.antithetic else count
	v = np.full(count, float(v0))
	stochastic = np.zeros(count)
	drift = np.zeros(count)
	variance = np.zeros(count)
	for i, (start, end) in enumerate(schedule.grid.intervals()):
		kappa, theta, lam, rho = schedule[i]
		steps = cfg.steps(end - start)
		h = (end - start) / steps
		sqrth = math.sqrt(h)
		decay = -math.expm1(-kappa*h) / kappa
		decay2 = -math.expm1(-2*kappa*h) / (2*kappa)
		for _ in range(steps):
			z = rng.standard_normal(draws)
			db = sqrth * (np.concatenate([z, -z]) if cfg.antithetic else z)
			gap = v - theta
			# exact integral of the relaxation skeleton  θ + (V_n - θ) e^{-κs}  on the step
			variance += (1 - rho*rho) * (theta*theta*h + 2*theta*gap*decay + gap*gap*decay2)
			stochastic += rho * v * db
			drift += rho*rho * v*v * h
			v = step_vol(v, kappa, theta, lam, h, db)
	return _Paths(v, stochastic, drift, variance)


def terminal_vols(state:ModelState, schedule:ParamSchedule, T:float, cfg:McConfig) -> np.ndarray:
	''' simulated volatilities at `T`, all batches concatenated in batch order '''
	schedule = schedule.until(T)
	batches = cfg.batches()
	vols = map_ordered(
		lambda b: _simulate_batch(schedule, state.v0, cfg, b, batches[b]).vol,
		range(len(batches)), cfg.workers, cfg.backend)
	return np.concatenate(vols)


def _statistics(samples:np.ndarray) -> tuple:
	''' `(count, sum, sum of squared deviations)` '''
	total = math.fsum(samples)
	mean = total / len(samples)
	return len(samples), total, math.fsum((samples - mean)**2)

def _combine(stats:list) -> tuple:
	''' merge batch statistics in order, returns `(count, mean, sum of squared deviations)` '''
	count, mean, squares = 0, 0., 0.
	for n, total, m2 in stats:
		batch_mean = total / n
		delta = batch_mean - mean
		merged = count + n
		squares += m2 + delta*delta * count*n/merged
		mean += delta * n/merged
		count = merged
	return count, math.fsum(total for _, total, _ in stats) / count, squares


def mc_price_puts(state:ModelState, schedule:ParamSchedule, contracts:list, cfg:McConfig=McConfig()) -> list:
	''' Monte Carlo prices of several puts of the same maturity, from the same paths

		Args:
			state:      spot and initial volatility
			schedule:   parameters, extended flat beyond their end if needed
			contracts:  `BsContext` of each put, all sharing one maturity
			cfg:        simulation settings

		Returns:
			a `McEstimate` per contract
	'''
	contracts = list(contracts)
	if not contracts:
		return []
	T = contracts[0].maturity
	if any(ctx.maturity != T for ctx in contracts):
		raise DomainError('contracts priced from the same paths must share their maturity')
	schedule = schedule.until(T)
	x0 = state.x0
	batches = cfg.batches()
	logger.info('simulating %d paths in %d batches up to %.4g years', cfg.paths, len(batches), T)

	def batch_statistics(batch):
		paths = _simulate_batch(schedule, state.v0, cfg, batch, batches[batch])
		x = x0 + paths.stochastic - 0.5*paths.drift
		stats = []
		for ctx in contracts:
			payoff = np.asarray(put_price_xy(ctx, x, paths.variance))
			if cfg.antithetic:
				half = len(payoff)//2
				payoff = 0.5*(payoff[:half] + payoff[half:])
			stats.append(_statistics(payoff))
		logger.debug('batch %d done', batch)
		return stats

	per_batch = map_ordered(batch_statistics, range(len(batches)), cfg.workers, cfg.backend)
	estimates = []
	for k in range(len(contracts)):
		count, mean, squares = _combine([stats[k] for stats in per_batch])
		stderr = math.sqrt(squares / (count-1) / count) if count > 1 else 0.
		estimates.append(McEstimate(mean, stderr, cfg.paths))
	return estimates

def mc_price_put(state:ModelState, schedule:ParamSchedule, ctx:BsContext, cfg:McConfig=McConfig()) -> McEstimate:
	''' Monte Carlo price of one put

		Example:

			>>> schedule = ParamSchedule.constant(1., kappa=2., theta=0.1, lam=0.5, rho=-0.5)
			>>> mc_price_put(ModelState(1., 0.1), schedule, BsContext(1., 1.), McConfig(paths=20_000))
			McEstimate(price=..., stderr=..., paths=20000)
	'''
	return mc_price_puts(state, schedule, [ctx], cfg)[0]

def mc_price_call(state:ModelState, schedule:ParamSchedule, ctx:BsContext, cfg:McConfig=McConfig()) -> McEstimate:
	''' Monte Carlo price of one call, by put-call parity on the put estimate '''
	put = mc_price_put(state, schedule, ctx, cfg)
	return McEstimate(put.price + state.spot*math.exp(-ctx.df) - ctx.discounted_strike, put.stderr, put.paths)
