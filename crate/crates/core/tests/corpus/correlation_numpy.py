from numpy.core.multiarray import ndarray
import numpy as np


def kernel(self, float_n: float, data: ndarray, corr: ndarray, mean: ndarray, stddev: ndarray):
    corr[np.diag_indices(corr.shape[0])] = 1.0
    for i in range(0, self.M - 1):
        corr[i,i+1:self.M] = (data[0:self.N,i] * data[0:self.N,i+1:self.M].T).sum(axis=1)
    tril_indices = np.tril_indices( n=self.M, m=self.M, k=-1 )
    triu_indices = np.triu_indices( n=self.M, m=self.M, k=1 )
    corr[tril_indices] = corr[triu_indices]
    corr[self.M - 1, self.M - 1] = 1.0
