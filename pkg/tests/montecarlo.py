from igavol.montecarlo import *
from igavol.montecarlo import _statistics, _combine
from igavol.termstructure import ParamSchedule, ModelState
from igavol.blackscholes import BsContext, put_price_xy
from igavol.expansion import coefficients, price_put_expansion
from igavol.errors import DomainError
from tests.oracle import published, surface
import math
import numpy as np


def test_config():
	cfg = McConfig(paths=10_000, batch_size=4096)
	assert cfg.batches() == [4096, 4096, 1808]
	assert cfg.steps(1.) == 2920
	assert cfg.steps(1/12) == math.ceil(2920/12)
	assert cfg.steps(1e-6) == 1
	# exact multiples do not get an extra step
	assert McConfig(steps_per_year=100).steps(0.25) == 25
	assert McConfig.reference_scale().paths == 1_000_000
	assert McConfig.reference_scale().steps_per_year == 8760
	assert cfg.replace(seed=3).seed == 3
	# antithetic paths come by pairs
	assert McConfig(paths=2001, batch_size=1001, antithetic=False).batches() == [1001, 1000]
	for kwargs in [dict(paths=0), dict(steps_per_year=0), dict(batch_size=1), dict(workers=0), dict(backend='mpi'),
			dict(paths=2001), dict(paths=2000, batch_size=1001)]:
		try:
			McConfig(**kwargs)
		except DomainError:
			pass
		else:
			assert False, kwargs

def test_step_positivity():
	rng = np.random.default_rng(7)
	count = 1_000_000
	v = rng.uniform(1e-4, 2., count)
	kappa = rng.uniform(0.05, 20., count)
	theta = rng.uniform(1e-3, 1., count)
	lam = rng.uniform(0.01, 5., count)
	dt = rng.uniform(1e-4, 1., count)
	# increments far in the tails
	db = rng.standard_normal(count) * np.sqrt(dt) * 8
	stepped = step_vol(v, kappa, theta, lam, dt, db)
	assert np.all(stepped > 0)
	assert np.all(np.isfinite(stepped))

def test_step_series_branch():
	kappa, theta, lam, dt = 2., 0.1, 0.5, 0.01
	# increment making δ exactly zero, and its neighbours
	db = (kappa + 0.5*lam*lam)*dt / lam
	middle = step_vol(0.2, kappa, theta, lam, dt, db)
	assert abs(middle - (0.2 + kappa*theta*dt)) < 1e-15
	for shift in [1e-9, -1e-9]:
		assert abs(step_vol(0.2, kappa, theta, lam, dt, db + shift) - middle) < 1e-8
	assert isinstance(middle, float)

def test_step_deterministic():
	''' without vol of vol a step is the exact relaxation toward θ '''
	v = step_vol(0.3, 2., 0.1, 0., 0.25, 0.)
	assert abs(v - (0.1 + 0.2*math.exp(-0.5))) < 1e-15

def test_strong_convergence():
	''' the scheme converges pathwise to the strong solution '''
	rng = np.random.default_rng(8)
	kappa, theta, lam, v0, T = 2., 0.1, 0.5, 0.1, 1.
	fine = 2048
	db = rng.standard_normal((2000, fine)) * math.sqrt(T/fine)
	exact = exact_vol_path(v0, kappa, theta, lam, T/fine, db)[:, -1]
	errors = []
	for steps in [32, 64, 128]:
		coarse = db.reshape(2000, steps, fine//steps).sum(axis=-1)
		v = np.full(2000, v0)
		for k in range(steps):
			v = step_vol(v, kappa, theta, lam, T/steps, coarse[:, k])
		errors.append(np.mean(np.abs(v - exact)))
	# first order: each halving of the step divides the error by about 2
	assert errors[0] >= 1.9 * errors[1]
	assert errors[1] >= 1.9 * errors[2]

def test_degenerate_vol_of_vol():
	schedule = ParamSchedule.from_table([0.25, 0.75], kappa=[2., 1.], theta=[0.1, 0.2], lam=[0., 0.], rho=[0., 0.])
	state = ModelState(1., 0.15)
	ctx = BsContext.from_rates(1.05, 0.75, 0.01, 0.02)
	cfg = McConfig(paths=2000, batch_size=512, steps_per_year=100)
	estimate = mc_price_put(state, schedule, ctx, cfg)
	reference = put_price_xy(ctx, 0., coefficients(schedule, 0.15, 0.75).psi)
	assert abs(estimate.price - reference) <= 1e-12 * reference
	assert estimate.stderr <= 1e-12
	assert estimate.paths == 2000

def test_stationary_moments():
	kappa, theta, lam = 2., 0.1, 0.5
	beta = 2*kappa/lam**2
	schedule = ParamSchedule.constant(10., kappa, theta, lam, 0.)
	cfg = McConfig(paths=20_000, batch_size=5000, steps_per_year=200, antithetic=False, seed=1)
	vols = terminal_vols(ModelState(1., 0.1), schedule, 20/kappa, cfg)
	assert len(vols) == 20_000
	mean_error = math.sqrt(vols.var() / len(vols))
	assert abs(vols.mean() - theta) < 3*mean_error
	variance = theta**2 / (beta - 1)
	# standard error of the sample variance
	variance_error = math.sqrt(np.var((vols - vols.mean())**2) / len(vols))
	assert abs(vols.var() - variance) < 3*variance_error

def test_determinism():
	schedule = ParamSchedule.from_table([0.25, 0.5], kappa=[2., 3.], theta=[0.1, 0.12], lam=[1., 1.5], rho=[-0.5, -0.3])
	state = ModelState(1., 0.1)
	contracts = [BsContext.from_rates(k, 0.5, 0.01, 0.0) for k in [0.9, 1., 1.1]]
	cfg = McConfig(paths=6000, batch_size=1000, steps_per_year=200, seed=11)
	serial = mc_price_puts(state, schedule, contracts, cfg)
	assert mc_price_puts(state, schedule, contracts, cfg) == serial
	# the worker count and the backend do not change the result
	assert mc_price_puts(state, schedule, contracts, cfg.replace(workers=3)) == serial
	assert mc_price_puts(state, schedule, contracts, cfg.replace(workers=2, backend='process')) == serial
	# another seed gives other paths
	assert mc_price_puts(state, schedule, contracts, cfg.replace(seed=12)) != serial

def test_batch_reduction():
	rng = np.random.default_rng(9)
	samples = rng.lognormal(size=10_001)
	chunks = np.split(samples, [100, 3000, 3001, 9000])
	count, mean, squares = _combine([_statistics(chunk) for chunk in chunks])
	assert count == len(samples)
	assert abs(mean - samples.mean()) < 1e-14 * samples.mean()
	assert abs(squares - ((samples - samples.mean())**2).sum()) < 1e-10 * squares

def test_expansion_agreement():
	''' at small vol of vol the expansion and the simulation agree '''
	schedule = ParamSchedule.constant(0.5, kappa=3., theta=0.1, lam=0.3, rho=-0.5)
	state = ModelState(1., 0.1)
	contracts = [BsContext.from_rates(k, 0.5, 0., 0.) for k in [0.92, 1., 1.08]]
	cfg = McConfig(paths=40_000, batch_size=10_000, steps_per_year=500)
	coefs = coefficients(schedule, 0.1, 0.5)
	for ctx, estimate in zip(contracts, mc_price_puts(state, schedule, contracts, cfg)):
		expansion = price_put_expansion(state, schedule, ctx, coefs)
		assert abs(estimate.price - expansion) < 4*estimate.stderr + 2e-5, (ctx, estimate, expansion)

def test_maturity_check():
	schedule = ParamSchedule.constant(1., 2., 0.1, 1., -0.5)
	contracts = [BsContext(1., 0.5), BsContext(1., 1.)]
	try:
		mc_price_puts(ModelState(1., 0.1), schedule, contracts, McConfig(paths=10))
	except DomainError:
		pass
	else:
		assert False
	assert mc_price_puts(ModelState(1., 0.1), schedule, [], McConfig(paths=10)) == []

def test_call_parity():
	schedule = ParamSchedule.constant(1., 2., 0.1, 1., -0.5)
	state = ModelState(1., 0.1)
	ctx = BsContext.from_rates(1.05, 1., 0.02, 0.01)
	cfg = McConfig(paths=2000, batch_size=1000, steps_per_year=50)
	put = mc_price_put(state, schedule, ctx, cfg)
	call = mc_price_call(state, schedule, ctx, cfg)
	assert abs(call.price - put.price - (math.exp(-ctx.df) - ctx.discounted_strike)) < 1e-15
	assert call.stderr == put.stderr

def test_antithetic_unbiased():
	schedule = ParamSchedule.from_table([0.25, 0.5], kappa=[2., 3.], theta=[0.1, 0.12], lam=[1., 1.5], rho=[-0.5, -0.3])
	state = ModelState(1., 0.1)
	ctx = BsContext.from_rates(0.95, 0.5, 0.01, 0.02)
	cfg = McConfig(paths=20_000, batch_size=5000, steps_per_year=200, seed=3)
	paired = mc_price_put(state, schedule, ctx, cfg)
	plain = mc_price_put(state, schedule, ctx, cfg.replace(antithetic=False, seed=4))
	assert paired.paths == plain.paths == 20_000
	assert abs(paired.price - plain.price) < 3*math.hypot(paired.stderr, plain.stderr)

def test_degenerate_vol_of_vol_correlated():
	''' without vol of vol the correlation only adds noise around the Black-Scholes price of the deterministic path '''
	schedule = ParamSchedule.from_table([0.25, 0.75], kappa=[2., 1.], theta=[0.1, 0.2], lam=[0., 0.], rho=[-0.6, 0.4])
	state = ModelState(1., 0.15)
	ctx = BsContext.from_rates(1.05, 0.75, 0.01, 0.02)
	estimate = mc_price_put(state, schedule, ctx, McConfig(paths=20_000, batch_size=5000, steps_per_year=100, seed=5))
	reference = put_price_xy(ctx, 0., coefficients(schedule, 0.15, 0.75).psi)
	assert estimate.stderr > 0
	assert abs(estimate.price - reference) < 3*estimate.stderr

def test_acceptance_step_refinement():
	''' doubling the time steps moves the price less than the statistical noise '''
	pub = published('audusd_2014-06-17.json')
	market = surface('audusd_2014-06-17.json')
	s = market.slices[0]
	ctx = BsContext.from_rates(s.atm().strike, s.maturity, s.r_d_eq, s.r_f_eq)
	state = ModelState(market.spot, pub.v0)
	cfg = McConfig(paths=200_000, workers=4)
	coarse = mc_price_put(state, pub.schedule, ctx, cfg)
	fine = mc_price_put(state, pub.schedule, ctx, cfg.replace(steps_per_year=2*cfg.steps_per_year, seed=1))
	# independent runs, their difference has the combined standard error
	assert abs(fine.price - coarse.price) < 3*math.hypot(coarse.stderr, fine.stderr)
