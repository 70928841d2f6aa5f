import threading

from django.test import SimpleTestCase, override_settings

from django_compressive_tactile.worker import memory_usage_mb, ordered_map


class OrderedMapTest(SimpleTestCase):
    def test_results_keep_input_order(self):
        items = list(range(50))
        self.assertEqual(ordered_map(lambda x: x * x, items, threads=4), [x * x for x in items])

    def test_single_thread_runs_inline(self):
        names = ordered_map(lambda _: threading.current_thread().name, range(3), threads=1)
        self.assertEqual(set(names), {threading.current_thread().name})

    @override_settings(DJANGO_COMPRESSIVE_TACTILE_THREADS=3)
    def test_thread_count_from_settings(self):
        names = ordered_map(lambda _: threading.current_thread().name, range(8))
        self.assertNotIn(threading.current_thread().name, names)

    def test_first_failure_is_raised(self):
        def fail_on_odd(x):
            if x % 2:
                raise ValueError(x)
            return x

        with self.assertRaisesMessage(ValueError, "1"):
            ordered_map(fail_on_odd, range(6), threads=2)

    def test_empty(self):
        self.assertEqual(ordered_map(str, [], threads=4), [])


class MemoryUsageTest(SimpleTestCase):
    def test_positive(self):
        self.assertGreater(memory_usage_mb(), 0)
