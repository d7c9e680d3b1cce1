''' command line of igavol

	usage:  python -m igavol {calibrate, price, mc-check, density, report} ...

	exit status is 0 on success, 1 on invalid input, 2 when a calibration did not converge
'''

import sys
import math
import logging
import warnings
from pathlib import Path
from typing import Literal, Optional

import tyro
from pnprint import nprint

from .errors import DomainError, ConvergenceWarning
from .blackscholes import implied_vol
from .expansion import price_put_expansion, price_call_expansion
from .montecarlo import McConfig, mc_price_put, mc_price_call
from .stationary import FIGURE_TARGETS, density_curves, feller_ratio
from .calibration import CalibrationOptions, calibrate, evaluate, error_report
from . import datafile


__all__ = ['main', 'cmd_calibrate', 'cmd_price', 'cmd_mc_check', 'cmd_density', 'cmd_report', 'EXIT_OK', 'EXIT_INPUT', 'EXIT_CONVERGENCE']

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_CONVERGENCE = 2


def _setup(verbose:bool):
	logging.basicConfig(
		level = logging.INFO if verbose else logging.WARNING,
		stream = sys.stderr,
		format = '%(levelname)s %(name)s: %(message)s',
		force = True,
		)

def _output_dir(output:Path) -> Path:
	output = Path(output)
	output.mkdir(parents=True, exist_ok=True)
	return output


def cmd_calibrate(input:Path, /, output:Path=Path('.'), seed:int=0, starts:int=3, budget:int=2000,
				global_polish:bool=False, verbose:bool=False) -> int:
	''' calibrate the IGa model to a market data file

	writes `<name>_params.json` (parameters, errors, statistics) and `<name>_errors.csv` in the output directory

	Args:
		input: market data file (JSON)
		output: output directory
		seed: seed of the multistart perturbations
		starts: Nelder-Mead starting points per slice
		budget: loss evaluations per slice
		global_polish: refit all parameters jointly after the slice by slice fit
		verbose: log progress on stderr
	'''
	_setup(verbose)
	surface = datafile.load_surface(input)
	options = CalibrationOptions(starts=starts, budget=budget, seed=seed, global_polish=global_polish)
	with warnings.catch_warnings():
		warnings.simplefilter('always', ConvergenceWarning)
		result = calibrate(surface, options)
	output = _output_dir(output)
	stem = Path(input).stem
	datafile.save_result(result, output / (stem + '_params.json'))
	datafile.write_report(error_report(result), output / (stem + '_errors.csv'))
	nprint(dict(
		v0 = result.v0,
		params = [dict(zip(('maturity', 'kappa', 'theta', 'lambda', 'rho'), row))  for row in result.schedule.table()],
		stats = result.stats(),
		converged = result.converged,
		))
	return EXIT_OK if result.converged else EXIT_CONVERGENCE


def cmd_price(params:Path, /, strike:float, maturity:float, kind:Literal['put', 'call']='put',
			method:Literal['expansion', 'mc', 'both']='expansion',
			paths:int=200_000, steps_per_year:float=2920, seed:int=0, workers:int=1,
			output:Optional[Path]=None, verbose:bool=False) -> int:
	''' price a vanilla with the parameters of a calibration result

	Args:
		params: parameter file written by `calibrate`
		strike: option strike
		maturity: maturity in years, within the rate curves of the parameter file
		kind: put or call
		method: expansion, Monte Carlo, or both for a cross check
		paths: Monte Carlo paths, even since they are simulated by antithetic pairs
		steps_per_year: Monte Carlo time steps per year
		seed: Monte Carlo seed
		workers: Monte Carlo worker threads
		output: optional CSV file receiving the results
		verbose: log progress on stderr
	'''
	_setup(verbose)
	loaded = datafile.load_params(params)
	ctx = loaded.context(strike, maturity)
	r_d, r_f = loaded.equivalent_rates(maturity)
	call = kind == 'call'
	rows = []

	def report(name, price, stderr=math.nan):
		try:
			vol = implied_vol(price, loaded.state.spot, strike, maturity, r_d, r_f, call=call)
		except DomainError as err:
			logger.warning('%s price has no implied volatility: %s', name, err)
			vol = math.nan
		rows.append((name, kind, strike, maturity, price, vol, stderr))

	if method in ('expansion', 'both'):
		pricer = price_call_expansion if call else price_put_expansion
		report('expansion', pricer(loaded.state, loaded.schedule, ctx))
	if method in ('mc', 'both'):
		cfg = McConfig(paths=paths, steps_per_year=steps_per_year, seed=seed, workers=workers)
		estimate = (mc_price_call if call else mc_price_put)(loaded.state, loaded.schedule, ctx, cfg)
		report('mc', estimate.price, estimate.stderr)

	columns = ('method', 'kind', 'strike', 'maturity', 'price', 'implied_vol', 'stderr')
	nprint([dict(zip(columns, row))  for row in rows])
	if output:
		datafile.write_csv(output, columns, rows)
	return EXIT_OK


def _load_model(input, params):
	''' surface of a data file and the parameters to check on it: a parameter file, or the published IGa parameters of the data file '''
	surface = datafile.load_surface(input)
	if params:
		loaded = datafile.load_params(params)
		return surface, loaded.state.v0, loaded.schedule
	published = datafile.load_published(input, 'iga')
	if published is None:
		raise DomainError('{} has no published parameters, give a parameter file'.format(input))
	return surface, published.v0, published.schedule


def cmd_mc_check(input:Path, /, params:Optional[Path]=None, output:Path=Path('.'),
				paths:int=200_000, steps_per_year:float=2920, seed:int=0, workers:int=1,
				verbose:bool=False) -> int:
	''' compare expansion and Monte Carlo implied volatilities on every quote of a data file

	writes `<name>_mc.csv` with the calibration, expansion and total errors of each quote

	Args:
		input: market data file (JSON)
		params: parameter file, default to the published parameters of the data file
		output: output directory
		paths: Monte Carlo paths per maturity, even since they are simulated by antithetic pairs
		steps_per_year: Monte Carlo time steps per year
		seed: Monte Carlo seed
		workers: Monte Carlo worker threads
		verbose: log progress on stderr
	'''
	_setup(verbose)
	surface, v0, schedule = _load_model(input, params)
	cfg = McConfig(paths=paths, steps_per_year=steps_per_year, seed=seed, workers=workers)
	report = error_report(evaluate(surface, v0, schedule), mc_cfg=cfg)
	datafile.write_report(report, _output_dir(output) / (Path(input).stem + '_mc.csv'))
	print(report.table())
	return EXIT_OK


def cmd_density(mean:Optional[float]=None, std:Optional[float]=None, output:Path=Path('.'),
				points:int=2000, lower:float=1e-4, upper:float=1.2, verbose:bool=False) -> int:
	''' stationary volatility densities of moment-matched IGa and Heston models

	writes `density_<mean>_<std>.csv` and the matched parameters in `density_<mean>_<std>.json`, for the given target or for the three reference targets when none is given

	Args:
		mean: target mean of the volatility
		std: target standard deviation of the volatility
		output: output directory
		points: grid points
		lower: grid start
		upper: grid end
		verbose: log progress on stderr
	'''
	_setup(verbose)
	if (mean is None) != (std is None):
		raise DomainError('give both the mean and the standard deviation, or none')
	targets = FIGURE_TARGETS if mean is None else ((mean, std),)
	output = _output_dir(output)
	matched = []
	for target_mean, target_std in targets:
		curves = density_curves(target_mean, target_std, points, lower, upper)
		name = 'density_{}_{}'.format(target_mean, target_std)
		datafile.write_csv(output / (name + '.csv'), curves.COLUMNS, curves.rows())
		datafile.write_json(output / (name + '.json'), curves.matched())
		matched.append(curves.matched())
	nprint(matched)
	return EXIT_OK


def cmd_report(input:Path, /, params:Optional[Path]=None, output:Optional[Path]=None, verbose:bool=False) -> int:
	''' calibration errors of given parameters on a data file, next to the published error statistics, with the Feller ratios of the published Heston parameters recomputed and as published

	Args:
		input: market data file (JSON)
		params: parameter file, default to the published parameters of the data file
		output: optional CSV file receiving the error table
		verbose: log progress on stderr
	'''
	_setup(verbose)
	surface, v0, schedule = _load_model(input, params)
	report = error_report(evaluate(surface, v0, schedule))
	print(report.table())
	summary = dict(stats=report.stats)
	iga = datafile.load_published(input, 'iga')
	if iga is not None and 'calibration' in iga.stats_bp:
		median, mean = iga.stats_bp['calibration']
		summary['published_stats'] = dict(calibration=dict(median_bp=median, mean_bp=mean))
	heston = datafile.load_published(input, 'heston')
	if heston is not None:
		summary['heston_feller'] = [round(feller_ratio(k, t, l), 4)  for k, t, l, _ in heston.schedule]
		if heston.feller:
			summary['published_heston_feller'] = list(heston.feller)
	nprint(summary)
	if output:
		datafile.write_report(report, output)
	return EXIT_OK


COMMANDS = {
	'calibrate': cmd_calibrate,
	'price': cmd_price,
	'mc-check': cmd_mc_check,
	'density': cmd_density,
	'report': cmd_report,
	}

def main(args=None) -> int:
	''' run a command, returning its exit status '''
	try:
		return tyro.extras.subcommand_cli_from_dict(COMMANDS, args=args, description=__doc__)
	except DomainError as err:
		print('error:', err, file=sys.stderr)
		return EXIT_INPUT
	except SystemExit as err:
		# argument parsing, its usage message is already printed
		return EXIT_OK if err.code in (0, None) else EXIT_INPUT


if __name__ == '__main__':
	sys.exit(main())
