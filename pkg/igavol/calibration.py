''' calibration of the IGa model to an implied volatility surface

	The surface is fitted maturity by maturity: the first slice fixes `V0` and the parameters of the first interval, each next slice fits the parameters of its own interval with the earlier ones frozen. An optional final polish refits everything jointly.

	The loss of a slice is the sum over its quotes of the squared difference between the implied volatility of the expansion price and the market volatility. Parameters are kept in their box by a logistic mapping, so the Nelder-Mead simplex works unconstrained.
'''

import math
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, logit

from .errors import DomainError, ConvergenceWarning
from .termstructure import ParamSchedule, ModelState, Params
from .blackscholes import BsContext, implied_vol, greek_xy
from .expansion import (ExpansionCoefficients, coefficients, coefficients_from_omega,
						omega_start, omega_advance, price_put_expansion)
from .montecarlo import McConfig, mc_price_puts
from .workers import map_ordered


__all__ = ['Quote', 'Slice', 'VolSurface', 'QUOTE_LABELS', 'DEFAULT_BOUNDS', 'PENALTY',
			'CalibrationOptions', 'QuoteFit', 'CalibrationResult',
			'model_vols', 'objective', 'calibrate', 'calibrate_many', 'evaluate',
			'ReportRow', 'ErrorReport', 'error_report', 'deviation_stats']

logger = logging.getLogger(__name__)


QUOTE_LABELS = ('10P', '25P', 'ATM', '25C', '10C')

DEFAULT_BOUNDS = dict(
	kappa = (0.05, 20.),
	theta = (0.001, 1.),
	lam = (0.01, 5.),
	rho = (-0.99, 0.99),
	v0 = (0.001, 1.),
	)

# loss contribution of a quote whose model price has no implied volatility
PENALTY = 1e4


@dataclass(frozen=True)
class Quote:
	''' market quote: label, strike and implied volatility (decimal) '''
	label: str
	strike: float
	vol: float

	def __post_init__(self):
		if not self.strike > 0:		raise DomainError('strike must be positive, got {}'.format(self.strike))
		if not 0 < self.vol < 2:	raise DomainError('volatility must lie in ]0, 2[, got {}'.format(self.vol))


@dataclass(frozen=True)
class Slice:
	''' quotes of one maturity

		Attributes:
			tenor:     display label like `'3M'`
			maturity:  maturity in years, authoritative over the tenor
			r_d_eq:    domestic equivalent constant rate over `[0, maturity]`
			r_f_eq:    foreign equivalent constant rate over `[0, maturity]`
			quotes:    quotes by increasing strike
	'''
	tenor: str
	maturity: float
	r_d_eq: float
	r_f_eq: float
	quotes: tuple

	def __post_init__(self):
		object.__setattr__(self, 'quotes', tuple(self.quotes))
		if not self.maturity > 0:
			raise DomainError('slice {}: maturity must be positive'.format(self.tenor))
		if not self.quotes:
			raise DomainError('slice {}: no quotes'.format(self.tenor))
		strikes = [quote.strike for quote in self.quotes]
		if any(b <= a for a, b in zip(strikes, strikes[1:])):
			raise DomainError('slice {}: strikes must be strictly increasing'.format(self.tenor))

	def context(self, quote:Quote) -> BsContext:
		return BsContext.from_rates(quote.strike, self.maturity, self.r_d_eq, self.r_f_eq)

	def contexts(self) -> list:
		return [self.context(quote) for quote in self.quotes]

	def quote(self, label:str) -> Quote:
		for quote in self.quotes:
			if quote.label == label:
				return quote
		raise KeyError(label)

	def atm(self) -> Quote:
		try:				return self.quote('ATM')
		except KeyError:	return self.quotes[len(self.quotes)//2]

	def skew(self) -> float:
		''' call wing minus put wing volatility '''
		try:				return self.quote('25C').vol - self.quote('25P').vol
		except KeyError:	return self.quotes[-1].vol - self.quotes[0].vol


@dataclass(frozen=True)
class VolSurface:
	''' implied volatility quotes on several maturities

		Attributes:
			spot:    spot price
			slices:  slices by increasing maturity
			pair, date:  descriptive only
	'''
	spot: float
	slices: tuple
	pair: str = ''
	date: str = ''

	def __post_init__(self):
		object.__setattr__(self, 'slices', tuple(self.slices))
		if not self.spot > 0:
			raise DomainError('spot must be positive, got {}'.format(self.spot))
		if not self.slices:
			raise DomainError('a surface needs at least one slice')
		maturities = self.maturities
		if any(b <= a for a, b in zip(maturities, maturities[1:])):
			raise DomainError('slice maturities must be strictly increasing')

	@property
	def maturities(self) -> tuple:
		return tuple(s.maturity for s in self.slices)

	def quotes(self):
		''' iterate over `(slice, quote)` '''
		for s in self.slices:
			for quote in s.quotes:
				yield s, quote


@dataclass(frozen=True)
class CalibrationOptions:
	''' calibration settings

		Attributes:
			starts:          number of Nelder-Mead starting points per slice, the first is a heuristic, the others random perturbations of it
			budget:          loss evaluations allowed per slice
			seed:            seed of the starting point perturbations
			global_polish:   refit all parameters jointly after the bootstrap
			polish_budget:   loss evaluations allowed for the polish
			penalty:         loss of a quote without model implied volatility
			bounds:          `(low, high)` for each of `kappa, theta, lam, rho, v0`
			spread:          standard deviation of the perturbations of starting points, in the unconstrained coordinates
	'''
	starts: int = 3
	budget: int = 2000
	seed: int = 0
	global_polish: bool = False
	polish_budget: int = 4000
	penalty: float = PENALTY
	bounds: dict = field(default_factory=lambda: dict(DEFAULT_BOUNDS))
	spread: float = 0.5

	# simplex convergence thresholds, on unconstrained coordinates and on the loss
	xatol = 1e-4
	fatol = 1e-10
	# a fit has converged when the restart from its best point improves the loss by less than this fraction
	stall = 1e-3

	def __post_init__(self):
		if self.starts < 1:		raise DomainError('at least one start is needed')
		if self.budget < 1:		raise DomainError('the evaluation budget must be positive')
		missing = set(DEFAULT_BOUNDS) - set(self.bounds)
		if missing:
			raise DomainError('missing bounds for {}'.format(', '.join(sorted(missing))))
		for name, (lo, hi) in self.bounds.items():
			if not lo < hi:
				raise DomainError('empty bounds for {}: {}'.format(name, (lo, hi)))


@dataclass(frozen=True)
class QuoteFit:
	''' model implied volatility of a quote, `error` is model minus market, `nan` when the model price has no implied volatility '''
	tenor: str
	maturity: float
	label: str
	strike: float
	market_vol: float
	model_vol: float
	error: float


@dataclass(frozen=True)
class CalibrationResult:
	''' fitted parameters with their implied volatility errors

		Attributes:
			surface:      the surface fitted
			v0:           initial volatility
			schedule:     parameters, one interval per slice
			fits:         per quote results, slice by slice
			losses:       final loss of each slice
			converged:    False if a slice fit was still improving when it exhausted its budget
			evaluations:  number of loss evaluations spent
	'''
	surface: VolSurface
	v0: float
	schedule: ParamSchedule
	fits: tuple
	losses: tuple
	converged: bool = True
	evaluations: int = 0

	@property
	def state(self) -> ModelState:
		return ModelState(self.surface.spot, self.v0)

	def errors(self) -> np.ndarray:
		return np.array([fit.error for fit in self.fits])

	def stats(self) -> dict:
		''' median and mean absolute calibration error in basis points '''
		return deviation_stats(self.errors())


def deviation_stats(errors) -> dict:
	''' median and mean absolute deviation in basis points of volatility errors given in decimal, `nan` entries count as missing '''
	errors = np.abs(np.asarray(errors, dtype=float))
	errors = errors[np.isfinite(errors)]
	if not errors.size:
		return dict(median_bp=math.nan, mean_bp=math.nan)
	return dict(median_bp=float(np.median(errors))*1e4, mean_bp=float(np.mean(errors))*1e4)


def model_vols(slice:Slice, schedule:ParamSchedule, v0:float, spot:float, coefs:ExpansionCoefficients=None) -> list:
	''' implied volatilities of the expansion prices of the slice quotes, `nan` where the price has none '''
	if coefs is None:
		coefs = coefficients(schedule, v0, slice.maturity)
	state = ModelState(spot, v0)
	vols = []
	for quote in slice.quotes:
		ctx = slice.context(quote)
		try:
			price = price_put_expansion(state, schedule, ctx, coefs)
			vols.append(implied_vol(price, spot, quote.strike, slice.maturity, slice.r_d_eq, slice.r_f_eq))
		except DomainError:
			vols.append(math.nan)
	return vols

def _loss(slice, vols, penalty):
	return math.fsum(
		penalty if not math.isfinite(vol) else (vol - quote.vol)**2
		for quote, vol in zip(slice.quotes, vols))

def objective(slice:Slice, schedule:ParamSchedule, v0:float, spot:float, penalty:float=PENALTY, coefs:ExpansionCoefficients=None) -> float:
	''' sum of squared implied volatility errors of the expansion on a slice

		Quotes without model implied volatility add `penalty` instead of failing.

		Args:
			slice:     market quotes of one maturity
			schedule:  candidate parameters up to at least the slice maturity
			v0:        candidate initial volatility
			spot:      spot price
			coefs:     expansion coefficients at the slice maturity, if already known
	'''
	try:
		vols = model_vols(slice, schedule, v0, spot, coefs)
	except DomainError:
		return penalty * len(slice.quotes)
	return _loss(slice, vols, penalty)


class _Box:
	''' logistic mapping between a box and the whole space '''
	def __init__(self, bounds):
		self.low = np.array([lo for lo, hi in bounds], dtype=float)
		self.high = np.array([hi for lo, hi in bounds], dtype=float)

	def params(self, free):
		return self.low + (self.high - self.low) * expit(free)

	def free(self, params):
		ratio = (np.asarray(params, dtype=float) - self.low) / (self.high - self.low)
		return logit(np.clip(ratio, 1e-9, 1-1e-9))


def _minimize(loss, box, starts, budget, options):
	''' best of Nelder-Mead runs from each start, the best run then restarted with the remaining budget

		returns `(params, loss, evaluations, converged)`, converged when the last run met its tolerances, or when a restart with at least a full share of the budget iterated without improving on the best loss by more than `options.stall`
	'''
	settings = dict(xatol=options.xatol, fatol=options.fatol)
	share = max(1, budget // (len(starts)+1))
	wrapped = lambda free: loss(box.params(free))
	best, spent = None, 0
	for start in starts:
		run = minimize(wrapped, box.free(start), method='Nelder-Mead', options=dict(maxfev=share, **settings))
		spent += run.nfev
		if best is None or run.fun < best.fun:
			best = run
	remaining = budget - spent
	settled = bool(best.success)
	if remaining > 0:
		run = minimize(wrapped, best.x, method='Nelder-Mead', options=dict(maxfev=remaining, **settings))
		spent += run.nfev
		stalled = remaining >= share and run.nit > 0 and best.fun - run.fun <= options.stall * abs(best.fun)
		settled = bool(run.success) or stalled
		if run.fun <= best.fun:
			best = run
	return box.params(best.x), float(best.fun), spent, settled

def _starts(first, box, options, stream):
	''' the given start and its random perturbations '''
	rng = np.random.default_rng(np.random.SeedSequence(options.seed, spawn_key=(stream,)))
	base = box.free(first)
	return [np.asarray(first, dtype=float)] + [
		box.params(base + options.spread * rng.standard_normal(len(base)))
		for _ in range(options.starts - 1)]

def _initial_guess(surface:VolSurface, bounds) -> list:
	''' `[v0, kappa, theta, lam, rho]` from the shortest and longest ATM volatilities and the skew sign '''
	guess = dict(
		v0 = surface.slices[0].atm().vol,
		kappa = 2.,
		theta = surface.slices[-1].atm().vol,
		lam = 1.,
		rho = 0.3 * np.sign(surface.slices[0].skew()),
		)
	return [min(max(guess[name], bounds[name][0]), bounds[name][1])  for name in ('v0', 'kappa', 'theta', 'lam', 'rho')]


def _slice_loss(surface, slice, start, v0, penalty):
	''' loss of a slice as a function of its interval parameters, with the integrals up to the previous slice frozen in `start`

		For the first slice `start` is None and the candidate is `[v0, kappa, theta, lam, rho]`.
	'''
	def loss(candidate):
		if start is None:
			initial, params = candidate[0], Params(*candidate[1:])
		else:
			initial, params = v0, Params(*candidate)
		try:
			state = omega_advance(omega_start(initial) if start is None else start, slice.maturity, params)
		except DomainError:
			return penalty * len(slice.quotes)
		return objective(slice, None, initial, surface.spot, penalty, coefficients_from_omega(state))
	return loss


def calibrate(surface:VolSurface, options:CalibrationOptions=CalibrationOptions()) -> CalibrationResult:
	''' fit `V0` and a piecewise-constant parameter schedule to the surface, one interval per slice

		Example:

			>>> surface = datafile.load_surface('igavol/fixtures/audusd_2014-06-17.json')
			>>> result = calibrate(surface)
			>>> result.stats()
			{'median_bp': ..., 'mean_bp': ...}
	'''
	bounds = options.bounds
	first_box = _Box([bounds[name] for name in ('v0', *Params._fields)])
	next_box = _Box([bounds[name] for name in Params._fields])

	v0 = None
	state = None
	rows = []
	losses = []
	evaluations = 0
	converged = True
	for index, slice in enumerate(surface.slices):
		loss = _slice_loss(surface, slice, state, v0, options.penalty)
		if state is None:
			box, first = first_box, _initial_guess(surface, bounds)
		else:
			box, first = next_box, list(rows[-1])

		fitted, value, spent, success = _minimize(loss, box, _starts(first, box, options, index), options.budget, options)
		evaluations += spent
		if state is None:
			v0 = float(fitted[0])
			params = Params(*map(float, fitted[1:]))
			state = omega_start(v0)
		else:
			params = Params(*map(float, fitted))
		state = omega_advance(state, slice.maturity, params)
		rows.append(params)
		losses.append(value)
		if not success:
			converged = False
			warnings.warn('slice {} did not converge within {} evaluations, loss {:.3g}'.format(slice.tenor, options.budget, value), ConvergenceWarning)
		logger.info('slice %s fitted: loss %.3g after %d evaluations', slice.tenor, value, spent)

	schedule = ParamSchedule.from_table(surface.maturities, *zip(*rows))
	if options.global_polish:
		v0, schedule, spent, success = _polish(surface, v0, schedule, options)
		evaluations += spent
		converged = converged and success
	result = evaluate(surface, v0, schedule, options.penalty)
	return CalibrationResult(surface, v0, schedule, result.fits, result.losses, converged, evaluations)


def _polish(surface, v0, schedule, options):
	''' joint refit of all parameters, returns `(v0, schedule, evaluations, converged)` '''
	bounds = options.bounds
	count = len(schedule)
	box = _Box([bounds['v0']] + [bounds[name] for _ in range(count) for name in Params._fields])

	def unpack(candidate):
		return candidate[0], [Params(*candidate[1+4*i : 5+4*i]) for i in range(count)]

	def loss(candidate):
		v0, rows = unpack(candidate)
		state = omega_start(v0)
		total = []
		for s, params in zip(surface.slices, rows):
			try:
				state = omega_advance(state, s.maturity, params)
			except DomainError:
				return options.penalty * sum(len(s.quotes) for s in surface.slices)
			total.append(objective(s, None, v0, surface.spot, options.penalty, coefficients_from_omega(state)))
		return math.fsum(total)

	start = [v0] + [value for i in range(count) for value in schedule[i]]
	initial = loss(np.asarray(start))
	fitted, value, spent, success = _minimize(loss, box, [start], options.polish_budget, options)
	if value > initial:
		return v0, schedule, spent, success
	logger.info('global polish: loss %.3g -> %.3g after %d evaluations', initial, value, spent)
	v0, rows = unpack([float(v) for v in fitted])
	return v0, ParamSchedule.from_table(surface.maturities, *zip(*rows)), spent, success


def evaluate(surface:VolSurface, v0:float, schedule:ParamSchedule, penalty:float=PENALTY) -> CalibrationResult:
	''' implied volatility errors of given parameters on the surface '''
	fits = []
	losses = []
	state = ModelState(surface.spot, v0)
	for s in surface.slices:
		coefs = coefficients(schedule, v0, s.maturity)
		vols = model_vols(s, schedule, v0, surface.spot, coefs)
		losses.append(_loss(s, vols, penalty))
		for quote, vol in zip(s.quotes, vols):
			fits.append(QuoteFit(s.tenor, s.maturity, quote.label, quote.strike, quote.vol, vol, vol - quote.vol))
	return CalibrationResult(surface, state.v0, schedule, tuple(fits), tuple(losses))


def calibrate_many(surfaces, options:CalibrationOptions=CalibrationOptions(), workers:int=1, backend:str='thread') -> list:
	''' calibrate independent surfaces concurrently, results in the order of the surfaces '''
	return map_ordered(lambda surface: calibrate(surface, options), surfaces, workers, backend)


@dataclass(frozen=True)
class ReportRow:
	''' one quote of an error report, volatilities and errors in decimal

		`calibration_error` is expansion minus market, `expansion_error` expansion minus Monte Carlo, `total_error` Monte Carlo minus market. The Monte Carlo columns are `nan` when no simulation was run.
	'''
	tenor: str
	maturity: float
	label: str
	strike: float
	market_vol: float
	model_vol: float
	calibration_error: float
	mc_vol: float = math.nan
	mc_vol_stderr: float = math.nan
	expansion_error: float = math.nan
	total_error: float = math.nan


@dataclass(frozen=True)
class ErrorReport:
	''' per quote errors and their statistics '''
	rows: tuple
	stats: dict

	COLUMNS = ('tenor', 'maturity', 'label', 'strike', 'market_vol', 'model_vol', 'calibration_error',
				'mc_vol', 'mc_vol_stderr', 'expansion_error', 'total_error')

	def table(self) -> str:
		''' human readable table: market volatility [calibration error] [expansion error], in percent '''
		lines = []
		labels = list(dict.fromkeys(row.label for row in self.rows))
		lines.append('{:>6}  '.format('') + '  '.join('{:^24}'.format(label) for label in labels))
		for tenor in dict.fromkeys(row.tenor for row in self.rows):
			cells = []
			for row in self.rows:
				if row.tenor != tenor:
					continue
				cell = '{:5.2f} [{:5.2f}]'.format(100*row.market_vol, 100*row.calibration_error)
				if math.isfinite(row.expansion_error):
					cell += ' [{:5.2f}]'.format(100*row.expansion_error)
				cells.append('{:<24}'.format(cell))
			lines.append('{:>6}  '.format(tenor) + '  '.join(cells))
		for kind, values in self.stats.items():
			lines.append('{:>18} error: median {:5.1f}bp  mean {:5.1f}bp'.format(kind, values['median_bp'], values['mean_bp']))
		return '\n'.join(lines)


def error_report(result:CalibrationResult, surface:VolSurface=None, mc_cfg:McConfig=None) -> ErrorReport:
	''' calibration errors of a result, and expansion errors against Monte Carlo when `mc_cfg` is given

		Args:
			result:   fitted or given parameters
			surface:  quotes to compare to, default to the surface of the result
			mc_cfg:   Monte Carlo settings, no simulation if omitted
	'''
	surface = surface or result.surface
	if surface is not result.surface:
		result = evaluate(surface, result.v0, result.schedule)
	state = result.state
	fits = iter(result.fits)
	rows = []
	for s in surface.slices:
		slice_fits = [next(fits) for _ in s.quotes]
		if mc_cfg is None:
			rows.extend(ReportRow(fit.tenor, fit.maturity, fit.label, fit.strike, fit.market_vol, fit.model_vol, fit.error)
				for fit in slice_fits)
			continue
		logger.info('Monte Carlo for slice %s', s.tenor)
		estimates = mc_price_puts(state, result.schedule, s.contexts(), mc_cfg)
		for quote, fit, estimate in zip(s.quotes, slice_fits, estimates):
			try:
				vol = implied_vol(estimate.price, surface.spot, quote.strike, s.maturity, s.r_d_eq, s.r_f_eq)
				ctx = s.context(quote)
				vega = greek_xy(ctx, state.x0, vol*vol*s.maturity, 0, 1) * 2*vol*s.maturity
				stderr = estimate.stderr / vega
			except DomainError:
				vol = stderr = math.nan
			rows.append(ReportRow(fit.tenor, fit.maturity, fit.label, fit.strike, fit.market_vol, fit.model_vol, fit.error,
				vol, stderr, fit.model_vol - vol, vol - fit.market_vol))

	stats = dict(calibration=deviation_stats([row.calibration_error for row in rows]))
	if mc_cfg is not None:
		stats['expansion'] = deviation_stats([row.expansion_error for row in rows])
		stats['total'] = deviation_stats([row.total_error for row in rows])
	return ErrorReport(tuple(rows), stats)
