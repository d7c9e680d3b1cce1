'''
	Pricing and calibration toolkit for the Inverse Gamma (IGa) stochastic volatility model, built around a closed-form second order expansion of vanilla prices in the volatility of volatility.

	Terms
	-----

	- the **IGa model** lets the log-spot be driven by a volatility `V` following `dV = κ(θ - V)dt + λV dB`, with piecewise-constant parameters `κ, θ, λ` and a piecewise-constant spot/volatility correlation `ρ`. Its stationary volatility follows an inverse gamma law

	- the **expansion** approximates a put price by the Black-Scholes price of the deterministic volatility path plus five greek corrections whose coefficients are computed exactly, without any quadrature

	- the **Monte Carlo** reference simulates the volatility only and prices the spot noise conditionally in closed form, with a scheme keeping the volatility positive

	- the **calibration** fits `V0` and the parameter term structure to an implied volatility surface, maturity after maturity

	Main classes
	------------

	- `ParamSchedule`   piecewise-constant parameters on a time grid
	- `ModelState`      spot and initial volatility
	- `BsContext`       strike, maturity and discounting of a vanilla
	- `McConfig`        Monte Carlo settings
	- `VolSurface`      market quotes
	- `CalibrationOptions`, `CalibrationResult`

	Main functions
	--------------

	- `price_put_expansion`, `price_call_expansion`  expansion prices
	- `coefficients`   expansion coefficients for a horizon
	- `mc_price_put`, `mc_price_puts`   Monte Carlo prices
	- `implied_vol`    Black-Scholes inversion
	- `calibrate`, `error_report`
	- `match_moments`, `density_curves`   stationary laws of IGa and Heston volatilities

	Commandline
	-----------

		$ python -m igavol calibrate igavol/fixtures/audusd_2014-06-17.json --output out/
		$ python -m igavol price out/audusd_2014-06-17_params.json --strike 0.9 --maturity 0.5 --method both
		$ python -m igavol mc-check igavol/fixtures/usdjpy_2014-06-11.json --paths 200000
		$ python -m igavol density --mean 0.3 --std 0.08
		$ python -m igavol report igavol/fixtures/usdsgd_2014-09-04.json

	Examples
	--------

	```python
	schedule = ParamSchedule.from_table([1/12, 0.25], kappa=[4.19, 2.33], theta=[0.0639, 0.1101], lam=[1.71, 1.12], rho=[-0.40, -0.74])
	state = ModelState(spot=0.9335, v0=0.0649)
	ctx = BsContext.from_rates(0.9168, 0.25, r_d_eq=0.0031, r_f_eq=0.0289)
	price = price_put_expansion(state, schedule, ctx)
	print(implied_vol(price, state.spot, ctx.strike, ctx.maturity, 0.0031, 0.0289))
	```

	Module content
	--------------
'''

__version__ = '0.1'
__docformat__ = 'google'
__all__ = [
	'DomainError', 'DataError', 'ConvergenceWarning',
	'TimeGrid', 'RateCurve', 'ParamSchedule', 'Params', 'ModelState', 'tenor_years',
	'BsContext', 'put_price_xy', 'call_price_xy', 'greek_xy', 'implied_vol',
	'coefficients', 'phi', 'price_put_expansion', 'price_call_expansion',
	'McConfig', 'McEstimate', 'mc_price_put', 'mc_price_puts', 'mc_price_call',
	'IgaStationary', 'HestonVolStationary', 'match_moments', 'feller_ratio', 'density_curves',
	'VolSurface', 'CalibrationOptions', 'CalibrationResult', 'calibrate', 'calibrate_many', 'evaluate', 'error_report',
	]

from .errors import DomainError, DataError, ConvergenceWarning
from .termstructure import TimeGrid, RateCurve, ParamSchedule, Params, ModelState, tenor_years
from .blackscholes import BsContext, put_price_xy, call_price_xy, greek_xy, implied_vol
from .expansion import coefficients, phi, price_put_expansion, price_call_expansion
from .montecarlo import McConfig, McEstimate, mc_price_put, mc_price_puts, mc_price_call
from .stationary import IgaStationary, HestonVolStationary, match_moments, feller_ratio, density_curves
from .calibration import VolSurface, CalibrationOptions, CalibrationResult, calibrate, calibrate_many, evaluate, error_report
