import unittest

from arsrg.exceptions import EmptyInput, EmptyRelevantSet
from arsrg.matching import evaluation
from arsrg.matching.match import RankedEntry, RankedList


def ranked(query_id: str, ids, scores=None) -> RankedList:
    scores = scores if scores is not None else [1.0 - 0.1 * i for i in range(len(ids))]
    return RankedList(query_id, tuple(RankedEntry(image_id, score, rank)
                                      for rank, (image_id, score) in enumerate(zip(ids, scores), start=1)))


class TestMrr(unittest.TestCase):
    def test_examples(self):
        self.assertEqual(1.0, evaluation.mrr([1, 1, 1]))
        self.assertAlmostEqual(1.75 / 3, evaluation.mrr([1, 2, 4]))
        self.assertAlmostEqual(0.1, evaluation.mrr([10]))

    def test_invalid(self):
        with self.assertRaises(EmptyInput):
            evaluation.mrr([])
        with self.assertRaises(ValueError):
            evaluation.mrr([0, 1])


class TestPrecisionRecall(unittest.TestCase):
    def test_all_relevant(self):
        precision, recall = evaluation.precision_recall(ranked('q', 'abcd'), {'a', 'b', 'c'}, 3)
        self.assertEqual((1.0, 1.0), (precision, recall))

    def test_disjoint(self):
        self.assertEqual((0.0, 0.0), evaluation.precision_recall(ranked('q', 'abcd'), {'x'}, 2))

    def test_partial(self):
        precision, recall = evaluation.precision_recall(ranked('q', 'abcdef'), {'b', 'd', 'f'}, 4)
        self.assertEqual(0.5, precision)
        self.assertAlmostEqual(2 / 3, recall)

    def test_empty_relevant(self):
        with self.assertRaises(EmptyRelevantSet):
            evaluation.precision_recall(ranked('q', 'ab'), set(), 1)

    def test_bad_cutoff(self):
        with self.assertRaises(ValueError):
            evaluation.precision_recall(ranked('q', 'ab'), {'a'}, 0)


class TestEvaluateRetrieval(unittest.TestCase):
    def test_average(self):
        rankings = {'q1': ranked('q1', 'abcd'), 'q2': ranked('q2', 'abcd'), 'q3': ranked('q3', 'abcd')}
        relevant = {'q1': {'a'}, 'q2': {'c', 'd'}, 'q3': set()}
        summary = evaluation.evaluate_retrieval(rankings, relevant, 2)
        self.assertEqual(2, summary.queries)
        self.assertAlmostEqual((1.0 + 1 / 3) / 2, summary.mrr)
        self.assertAlmostEqual((0.5 + 0.0) / 2, summary.precision)
        self.assertAlmostEqual((1.0 + 0.0) / 2, summary.recall)

    def test_never_retrieved(self):
        summary = evaluation.evaluate_retrieval({'q': ranked('q', 'ab')}, {'q': {'z'}}, 1)
        self.assertEqual(0.0, summary.mrr)

    def test_no_relevant_anywhere(self):
        with self.assertRaises(EmptyInput):
            evaluation.evaluate_retrieval({'q': ranked('q', 'ab')}, {}, 1)

    def test_first_relevant_rank(self):
        self.assertEqual(3, evaluation.first_relevant_rank(ranked('q', 'abc'), {'c'}))
        self.assertEqual(0, evaluation.first_relevant_rank(ranked('q', 'abc'), {'z'}))


class TestCsv(unittest.TestCase):
    def test_rankings(self):
        text = evaluation.rankings_csv([ranked('q', 'ab', [1.0, 0.25])])
        self.assertEqual('query_id,rank,target_id,score\nq,1,a,1.000000\nq,2,b,0.250000\n', text)

    def test_summaries(self):
        summary = evaluation.RetrievalSummary(0.5, 0.25, 1.0, 10, 4)
        text = evaluation.summaries_csv([(0.7, summary)])
        self.assertEqual('rho,mrr,precision,recall,cutoff\n0.7,0.500000,0.250000,1.000000,10\n', text)


if __name__ == '__main__':
    unittest.main()
