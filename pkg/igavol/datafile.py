''' file formats of the command line

	- market data files (JSON): spot and slices of quotes, optionally the parameters published for the dataset
	- parameter files (JSON): a calibration result or any set of parameters, with the rates needed to price
	- tables (CSV): error tables and density curves, always with a dot decimal separator and a fixed column order

	Every schema error raises a `DataError` naming the file and the faulty field like `slices[2].quotes[0].strike`, syntax errors name the file, line and column.
'''

import csv
import json
import math
from dataclasses import dataclass

from .errors import DomainError, DataError
from .termstructure import ParamSchedule, ModelState, RateCurve, curve_from_equivalent_rates, tenor_years
from .blackscholes import BsContext
from .calibration import Quote, Slice, VolSurface, CalibrationResult, ErrorReport


__all__ = ['load_json', 'load_surface', 'load_published', 'surface_from_dict', 'surface_to_dict',
			'Published', 'PricingParams', 'result_to_dict', 'save_result', 'load_params',
			'write_csv', 'write_report', 'write_json', 'MODELS', 'DAY_COUNTS']

MODELS = ('iga', 'heston')
DAY_COUNTS = ('tenor', 'years')


def load_json(path) -> dict:
	''' parse a JSON file, syntax errors are reported as `file:line:column: message` '''
	try:
		with open(path, 'r', encoding='utf-8') as file:
			return json.load(file)
	except json.JSONDecodeError as err:
		raise DataError('{}:{}:{}: {}'.format(path, err.lineno, err.colno, err.msg)) from err
	except OSError as err:
		raise DataError('{}: {}'.format(path, err.strerror or err)) from err


class _Reader:
	''' access to nested JSON values reporting the field path on error '''
	def __init__(self, source:str, value, path:str=''):
		self.source = source
		self.value = value
		self.path = path

	def fail(self, message):
		raise DataError('{}: {}: {}'.format(self.source, self.path or '<root>', message))

	def __getitem__(self, key) -> '_Reader':
		path = '{}[{}]'.format(self.path, key) if isinstance(key, int) else (self.path + '.' + key if self.path else key)
		if isinstance(key, int):
			if not isinstance(self.value, list):	self.fail('expected a list')
			if key >= len(self.value):				self.fail('missing item {}'.format(key))
		else:
			if not isinstance(self.value, dict):	self.fail('expected an object')
			if key not in self.value:
				_Reader(self.source, None, path).fail('missing field')
		return _Reader(self.source, self.value[key], path)

	def __contains__(self, key):
		return isinstance(self.value, dict) and key in self.value

	def items(self) -> list:
		if not isinstance(self.value, list):
			self.fail('expected a list')
		return [self[i] for i in range(len(self.value))]

	def number(self) -> float:
		if isinstance(self.value, bool) or not isinstance(self.value, (int, float)):
			self.fail('expected a number, got {}'.format(json.dumps(self.value)))
		if not math.isfinite(self.value):
			self.fail('expected a finite number')
		return float(self.value)

	def numbers(self) -> list:
		return [item.number() for item in self.items()]

	def string(self) -> str:
		if not isinstance(self.value, str):
			self.fail('expected a string, got {}'.format(json.dumps(self.value)))
		return self.value

	def get(self, key, default=None):
		return self[key] if key in self else default

	def build(self, constructor, *args, **kwargs):
		''' call a constructor, turning its domain errors into errors located at this field '''
		try:
			return constructor(*args, **kwargs)
		except DataError:
			raise
		except DomainError as err:
			self.fail(err)


def surface_from_dict(data:dict, source:str='<data>') -> VolSurface:
	''' build a surface from the content of a market data file

		The schema is

			{"pair": "AUDUSD", "date": "2014-06-17", "spot": 0.9335, "day_count": "tenor",
			 "slices": [{"tenor": "1M", "maturity_years": 0.0833, "r_d_eq": 0.0021, "r_f_eq": 0.028,
			             "quotes": [{"label": "10P", "strike": 0.9103, "vol": 0.0748}, ...]}, ...]}

		volatilities and rates are decimals. `day_count` is one of `DAY_COUNTS`, `'tenor'` when absent:

		- `'tenor'`: `maturity_years` is optional and defaults to the year fraction of the tenor label (`tenor_years`)
		- `'years'`: `maturity_years` is required

		when given, `maturity_years` is authoritative over the tenor label.
	'''
	root = _Reader(source, data)
	day_count = root['day_count'].string() if 'day_count' in root else 'tenor'
	if day_count not in DAY_COUNTS:
		root['day_count'].fail('unknown day count {}, expected one of {}'.format(json.dumps(day_count), ', '.join(DAY_COUNTS)))
	slices = []
	for item in root['slices'].items():
		quotes = []
		for entry in item['quotes'].items():
			quotes.append(entry.build(Quote, entry['label'].string(), entry['strike'].number(), entry['vol'].number()))
		if not quotes:
			item['quotes'].fail('no quotes')
		tenor = item['tenor'].string()
		if day_count == 'tenor' and 'maturity_years' not in item:
			maturity = item['tenor'].build(tenor_years, tenor)
		else:
			maturity = item['maturity_years'].number()
		slices.append(item.build(Slice,
			tenor = tenor,
			maturity = maturity,
			r_d_eq = item['r_d_eq'].number(),
			r_f_eq = item['r_f_eq'].number(),
			quotes = quotes,
			))
	return root.build(VolSurface,
		spot = root['spot'].number(),
		slices = slices,
		pair = root.get('pair').string() if 'pair' in root else '',
		date = root.get('date').string() if 'date' in root else '',
		)

def surface_to_dict(surface:VolSurface) -> dict:
	return dict(
		pair = surface.pair,
		date = surface.date,
		spot = surface.spot,
		day_count = 'tenor',
		slices = [dict(
			tenor = s.tenor,
			maturity_years = s.maturity,
			r_d_eq = s.r_d_eq,
			r_f_eq = s.r_f_eq,
			quotes = [dict(label=q.label, strike=q.strike, vol=q.vol)  for q in s.quotes],
			) for s in surface.slices],
		)

def load_surface(path) -> VolSurface:
	return surface_from_dict(load_json(path), str(path))


@dataclass(frozen=True)
class Published:
	''' parameters and error tables shipped with a dataset

		Attributes:
			model:               `'iga'` or `'heston'`, for Heston `theta` and `v0` are variance levels
			v0:                  initial volatility (variance for Heston)
			schedule:            parameters on the slice maturities
			calibration_errors:  rows of errors per slice, decimal, empty if not given
			expansion_errors:    same for the expansion against Monte Carlo
			feller:              published `2κθ/λ²` per slice, empty if not given
			stats_bp:            `{kind: (median, mean)}` in basis points
	'''
	model: str
	v0: float
	schedule: ParamSchedule
	calibration_errors: tuple = ()
	expansion_errors: tuple = ()
	feller: tuple = ()
	stats_bp: dict = None

def load_published(path, model:str='iga') -> Published:
	''' published parameters of a market data file, `None` if the file has none for this model '''
	if model not in MODELS:
		raise DomainError('unknown model {}, expected one of {}'.format(repr(model), MODELS))
	data = load_json(path)
	root = _Reader(str(path), data)
	if 'published' not in root or model not in root['published']:
		return None
	surface = surface_from_dict(data, str(path))
	node = root['published'][model]
	schedule = node.build(ParamSchedule.from_table, surface.maturities,
		node['kappa'].numbers(), node['theta'].numbers(), node['lambda'].numbers(), node['rho'].numbers())
	table = lambda key:  tuple(tuple(row.numbers()) for row in node[key].items())  if key in node else ()
	stats = {}
	if 'stats_bp' in node:
		for kind in node['stats_bp'].value:
			stats[kind] = tuple(node['stats_bp'][kind].numbers())
	return Published(
		model = model,
		v0 = node['v0'].number(),
		schedule = schedule,
		calibration_errors = table('calibration_errors'),
		expansion_errors = table('expansion_errors'),
		feller = tuple(node['feller'].numbers()) if 'feller' in node else (),
		stats_bp = stats,
		)


@dataclass(frozen=True)
class PricingParams:
	''' everything needed to price vanillas: spot, initial volatility, parameters and rate curves '''
	state: ModelState
	schedule: ParamSchedule
	domestic: RateCurve
	foreign: RateCurve

	def context(self, strike:float, maturity:float) -> BsContext:
		''' contract discounting from the rate curves, a maturity beyond the curves is a `DomainError` '''
		if not strike > 0:
			raise DomainError('strike must be positive, got {}'.format(strike))
		if not 0 < maturity <= self.domestic.grid.end:
			raise DomainError('maturity {} out of the rate curves range ]0, {}]'.format(maturity, self.domestic.grid.end))
		return BsContext.from_curves(strike, maturity, self.domestic, self.foreign)

	def equivalent_rates(self, maturity:float) -> tuple:
		''' `(r_d_eq, r_f_eq)` over `[0, maturity]` '''
		return self.domestic.equivalent_rate(maturity), self.foreign.equivalent_rate(maturity)


def _schedule_dict(schedule:ParamSchedule) -> dict:
	return dict(
		maturities = list(schedule.grid.maturities),
		kappa = list(schedule.kappa),
		theta = list(schedule.theta),
		# `lambda` is the field name users read, python reserves it
		**{'lambda': list(schedule.lam)},
		rho = list(schedule.rho),
		)

def result_to_dict(result:CalibrationResult) -> dict:
	''' content of a parameter file '''
	surface = result.surface
	return dict(
		spot = surface.spot,
		v0 = result.v0,
		schedule = _schedule_dict(result.schedule),
		rates = dict(
			maturities = list(surface.maturities),
			r_d_eq = [s.r_d_eq for s in surface.slices],
			r_f_eq = [s.r_f_eq for s in surface.slices],
			),
		converged = result.converged,
		evaluations = result.evaluations,
		losses = list(result.losses),
		stats = result.stats(),
		errors = [dict(tenor=f.tenor, maturity=f.maturity, label=f.label, strike=f.strike,
					market_vol=f.market_vol, model_vol=_finite(f.model_vol), error=_finite(f.error))
				for f in result.fits],
		surface = surface_to_dict(surface),
		)

def _finite(value):
	return value if math.isfinite(value) else None

def write_json(path, data):
	with open(path, 'w', encoding='utf-8') as file:
		json.dump(data, file, indent='\t', allow_nan=False)
		file.write('\n')

def save_result(result:CalibrationResult, path):
	write_json(path, result_to_dict(result))

def load_params(path) -> PricingParams:
	''' read a parameter file written by `save_result` '''
	root = _Reader(str(path), load_json(path))
	node = root['schedule']
	schedule = node.build(ParamSchedule.from_table, node['maturities'].numbers(),
		node['kappa'].numbers(), node['theta'].numbers(), node['lambda'].numbers(), node['rho'].numbers())
	state = root.build(ModelState, root['spot'].number(), root['v0'].number())
	rates = root['rates']
	maturities = rates['maturities'].numbers()
	domestic = rates.build(curve_from_equivalent_rates, maturities, rates['r_d_eq'].numbers())
	foreign = rates.build(curve_from_equivalent_rates, maturities, rates['r_f_eq'].numbers())
	return PricingParams(state, schedule, domestic, foreign)


def _cell(value):
	if isinstance(value, float):
		return repr(value) if math.isfinite(value) else ''
	return str(value)

def write_csv(path, columns, rows):
	''' write a table, floats at full precision with a dot decimal separator whatever the locale, `nan` as empty cells '''
	with open(path, 'w', encoding='utf-8', newline='') as file:
		writer = csv.writer(file, lineterminator='\n')
		writer.writerow(columns)
		for row in rows:
			writer.writerow([_cell(float(v) if not isinstance(v, (str, int)) else v)  for v in row])

def write_report(report:ErrorReport, path):
	''' write the per quote rows of an error report '''
	write_csv(path, report.COLUMNS, ([getattr(row, name) for name in report.COLUMNS]  for row in report.rows))
