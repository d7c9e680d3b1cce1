''' result-returning threads and forked worker processes

	A task is a plain python function with no arguments. Running it on a `Thread` or a `Process` gives an object whose `wait()` returns the function result, or raises the exception that stopped it.
'''

import sys, os, traceback, threading
import logging

import dill


__all__ = ['thread', 'process', 'map_ordered', 'Thread', 'Process', 'BACKENDS']

logger = logging.getLogger(__name__)

BACKENDS = ('thread', 'process')


def thread(func, detach=False) -> 'Thread':
	''' spawn a thread running the given function

		Args:
			func:  the function run by the thread, its result or errors are propagated to `Thread.wait()`
			detach:  if `False`, the thread will be set as daemon and stopped automatically when the process's main thread ends
	'''
	thread = Thread(target=func, daemon=not detach)
	thread.start()
	return thread


class Thread(threading.Thread):
	''' a thread object that returns a result and propagates exceptions

		It is often more convenient to instantiate it using `thread`

		Example:

			>>> task = thread(lambda: sum(range(10)))
			>>> task.wait()
			45

			Errors are propagated

			>>> root = thread(lambda: math.sqrt(-1))
			>>> root.wait()
			Traceback (most recent call last):
			...
			ValueError: math domain error
	'''
	def __init__(self, target:callable, daemon=None, name:str=None):
		super().__init__(daemon=daemon, name=name)
		self.error = RuntimeError('thread terminated')
		self.target = target
		self.result = None
		self.checked = False

	def __repr__(self):
		if not self.is_alive():
			if self.error:		state = 'aborted'
			else:				state = 'complete'
		else:	state = 'running'
		if self.daemon:	state = 'daemon '+state
		return '<{} {}, {}>'.format(type(self).__name__, self.ident, state)

	def __del__(self):
		if self.error and not self.checked and self.ident is not None and not isinstance(self.error, SystemExit):
			print('Exception in', self, file=sys.stderr)
			traceback.print_exception(self.error)

	def run(self):
		''' not meant for override, the function to run in the thread must be passed to `self.__init__` '''
		try:
			self.result = self.target()
		except Exception as err:
			self.error = err
		else:
			self.error = None

	def available(self) -> bool:
		''' return True if the result is available (the thread ended successfully or with an error) '''
		return not self.is_alive()

	def complete(self) -> bool:
		''' return True if the thread ended successfully, False if still running, and raise the exception that stopped the thread if any. '''
		if self.is_alive():
			return False
		self.checked = True
		if self.error:
			raise self.error
		return True

	def wait(self, timeout:float=None):
		''' same as `join()` but return the thread function's return value on successfull termination, and raise the exception that stopped the thread if any. '''
		self.join(timeout)
		if self.is_alive():
			raise TimeoutError
		self.checked = True
		if self.error:
			raise self.error
		return self.result


def process(func) -> 'Process':
	''' fork a process running the given function

		The child process inherits the whole memory of the current process, so `func` can be any closure. Its result or exception is sent back serialized with `dill`.
	'''
	return Process(func)


class Process:
	''' a forked process computing one function result

		The pipe from the child is drained by a `Thread` so that large results never block the child.

		Attributes:
			pid:  the child process pid
	'''
	def __init__(self, func:callable):
		if not hasattr(os, 'fork'):
			raise OSError('forking processes is not supported on this platform')
		read, write = os.pipe()
		# flush before forking, so buffered output is not written twice
		sys.stdout.flush()
		sys.stderr.flush()
		pid = os.fork()
		if pid == 0:
			os.close(read)
			_child(func, write)
		os.close(write)
		self.pid = pid
		self.reader = thread(lambda: self._collect(read))

	def __repr__(self):
		return '<{} {}>'.format(type(self).__name__, self.pid)

	def _collect(self, fd):
		with os.fdopen(fd, 'rb') as pipe:
			data = pipe.read()
		os.waitpid(self.pid, 0)
		if not data:
			raise ChildProcessError('worker process {} exited without result'.format(self.pid))
		error, report, result = dill.loads(data)
		if error is not None:
			if hasattr(error, 'add_note'):
				error.add_note('in worker process {}:\n{}'.format(self.pid, report))
			raise error
		return result

	def available(self) -> bool:
		return self.reader.available()

	def wait(self, timeout:float=None):
		''' return the function result, or raise its exception '''
		return self.reader.wait(timeout)

def _child(func, fd):
	status = 0
	try:
		try:
			payload = (None, None, func())
		except Exception as err:
			payload = (err, ''.join(traceback.format_exception(err)), None)
		try:
			data = dill.dumps(payload)
		except Exception as err:
			data = dill.dumps((RuntimeError('unable to serialize worker result: {}'.format(err)), '', None))
		with os.fdopen(fd, 'wb') as pipe:
			pipe.write(data)
	except BaseException:
		status = 1
	finally:
		os._exit(status)


def map_ordered(func, items, workers:int=1, backend:str='thread') -> list:
	''' `[func(item) for item in items]` computed by several workers

		Items are split in contiguous chunks, one per worker, and results come back in item order whatever the number of workers or the backend.

		Args:
			workers:  number of threads or processes, `1` runs in the current thread
			backend:  `'thread'` or `'process'`
	'''
	if backend not in BACKENDS:
		raise ValueError('unknown backend {}, expected one of {}'.format(repr(backend), BACKENDS))
	items = list(items)
	if workers <= 1 or len(items) <= 1:
		return [func(item) for item in items]

	workers = min(workers, len(items))
	size, extra = divmod(len(items), workers)
	chunks = []
	start = 0
	for i in range(workers):
		stop = start + size + (i < extra)
		chunks.append(items[start:stop])
		start = stop
	logger.debug('%d items on %d %s workers', len(items), workers, backend)

	spawn = thread if backend == 'thread' else process
	tasks = [spawn(lambda chunk=chunk: [func(item) for item in chunk])  for chunk in chunks]
	results = []
	for task in tasks:
		results.extend(task.wait())
	return results
