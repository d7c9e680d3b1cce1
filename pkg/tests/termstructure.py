from igavol.termstructure import *
from igavol.errors import DomainError
import math


def test_time_grid():
	grid = TimeGrid.from_maturities([1/12, 0.25, 0.5, 1.])
	assert len(grid) == 4
	assert grid.end == 1.
	assert grid.locate(0.) == 0
	assert grid.locate(0.25) == 2		# intervals are closed on the left
	assert grid.locate(1.) == 3			# the last one on the right too
	assert list(grid.intervals())[1] == (1/12, 0.25)

	merged = grid.merge([0.1, 0.3], until=0.5)
	assert merged.boundaries == (0., 1/12, 0.1, 0.25, 0.3, 0.5)

	for boundaries in [(0.,), (0.1, 0.2), (0., 0.5, 0.5), (0., 1., 0.5)]:
		try:
			TimeGrid(boundaries)
		except DomainError:
			pass
		else:
			assert False, boundaries
	try:
		grid.locate(1.5)
	except DomainError:
		pass
	else:
		assert False

def test_tenors():
	assert tenor_years('1M') == 1/12
	assert tenor_years('1y') == 1.
	try:
		tenor_years('5D')
	except DomainError:
		pass
	else:
		assert False

def test_step_integral():
	grid = TimeGrid((0., 0.5, 1.))
	curve = StepFunction(grid, (1., 3.))
	assert curve(0.2) == 1.
	assert curve(0.5) == 3.
	assert integrate_step(curve, 0., 1.) == 2.
	# a sub interval straddling a boundary
	assert abs(integrate_step(curve, 0.25, 0.75) - (0.25 + 0.75)) < 1e-15
	assert integrate_step(curve, 0.3, 0.3) == 0.
	try:
		integrate_step(curve, 0., 1.5)
	except DomainError:
		pass
	else:
		assert False

	refined = curve.on(TimeGrid((0., 0.25, 0.5, 0.75, 1., 2.)))
	assert refined.tolist() == [1., 1., 3., 3., 3.]

def test_equivalent_rates():
	maturities = [1/12, 0.25, 0.5, 1.]
	r_eq = [0.0021, 0.0031, 0.0045, 0.0069]
	curve = curve_from_equivalent_rates(maturities, r_eq)
	for T, r in zip(maturities, r_eq):
		assert abs(curve.equivalent_rate(T) - r) < 1e-15
	# forwards of an increasing term structure are above the equivalent rates
	assert all(f >= r - 1e-15 for f, r in zip(curve.rates, r_eq))

	flat = RateCurve(TimeGrid((0., 2.)), (0.02,))
	assert abs(flat.equivalent_rate(1.3) - 0.02) < 1e-16

	# negative rates are allowed
	negative = curve_from_equivalent_rates([0.5, 1.], [-0.0004, 0.0007])
	assert negative.rates[0] == -0.0004

def test_schedule_validation():
	good = dict(kappa=[1.], theta=[0.1], lam=[0.5], rho=[-0.5])
	ParamSchedule.from_table([1.], **good)
	for name, value in [('kappa', [0.]), ('theta', [-0.1]), ('lam', [-1.]), ('rho', [1.]), ('rho', [-1.]), ('kappa', [1., 2.])]:
		try:
			ParamSchedule.from_table([1.], **dict(good, **{name: value}))
		except DomainError:
			pass
		else:
			assert False, (name, value)
	# a null vol of vol is a valid degenerate schedule
	ParamSchedule.from_table([1.], **dict(good, lam=[0.]))

def test_schedule_restriction():
	schedule = ParamSchedule.from_table([0.25, 0.5, 1.], kappa=[1., 2., 3.], theta=[0.1, 0.2, 0.3], lam=[0.5, 0.6, 0.7], rho=[-0.1, -0.2, -0.3])
	assert schedule[schedule.grid.locate(0.3)] == Params(2., 0.2, 0.6, -0.2)
	assert schedule[2].rho == -0.3

	# cut on a boundary
	cut = schedule.until(0.5)
	assert cut.grid.boundaries == (0., 0.25, 0.5)
	assert cut.kappa == (1., 2.)
	# cut inside an interval
	cut = schedule.until(0.7)
	assert cut.grid.boundaries == (0., 0.25, 0.5, 0.7)
	assert cut.theta == (0.1, 0.2, 0.3)
	# flat extension
	longer = schedule.until(2.)
	assert longer.grid.boundaries == (0., 0.25, 0.5, 2.)
	assert longer[2] == schedule[2]

	assert schedule.until(0.25).grid.boundaries == (0., 0.25)

	refined = schedule.on(TimeGrid((0., 0.1, 0.25, 0.6, 1.)))
	assert refined.kappa == (1., 1., 2., 3.)
	assert schedule.table()[0] == (0.25, 1., 0.1, 0.5, -0.1)

def test_model_state():
	state = ModelState(102., 0.0442)
	assert state.x0 == math.log(102.)
	for spot, v0 in [(0., 0.1), (1., 0.), (-1., 0.1)]:
		try:
			ModelState(spot, v0)
		except DomainError:
			pass
		else:
			assert False
