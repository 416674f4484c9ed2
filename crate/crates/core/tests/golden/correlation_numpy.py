from numpy.core.multiarray import ndarray
import numpy as np


import amphc_rt


def kernel(self, float_n: float, data: ndarray, corr: ndarray, mean: ndarray, stddev: ndarray):
    if type(float_n) == float and type(data) == np.ndarray and type(corr) == np.ndarray and type(mean) == np.ndarray and type(stddev) == np.ndarray:
        if data.ndim == 2 and corr.ndim == 2:
            corr[np.diag_indices(corr.shape[0])] = 1.0
            __t0 = np.dot(data[0:self.N, 0:self.M - 1].T, data[0:self.N, 1:self.M])
            corr[0:self.M - 1, 1:self.M] = np.where(np.triu(np.ones((self.M - 1, self.M - 1), dtype=bool), k=0), __t0, corr[0:self.M - 1, 1:self.M])
            tril_indices = np.tril_indices( n=self.M, m=self.M, k=-1 )
            triu_indices = np.triu_indices( n=self.M, m=self.M, k=1 )
            corr[tril_indices] = corr[triu_indices]
            corr[self.M - 1, self.M - 1] = 1.0
        else:
            corr[np.diag_indices(corr.shape[0])] = 1.0
            for i in range(0, self.M - 1):
                corr[i,i+1:self.M] = (data[0:self.N,i] * data[0:self.N,i+1:self.M].T).sum(axis=1)
            tril_indices = np.tril_indices( n=self.M, m=self.M, k=-1 )
            triu_indices = np.triu_indices( n=self.M, m=self.M, k=1 )
            corr[tril_indices] = corr[triu_indices]
            corr[self.M - 1, self.M - 1] = 1.0
    else:
        corr[np.diag_indices(corr.shape[0])] = 1.0
        for i in range(0, self.M - 1):
            corr[i,i+1:self.M] = (data[0:self.N,i] * data[0:self.N,i+1:self.M].T).sum(axis=1)
        tril_indices = np.tril_indices( n=self.M, m=self.M, k=-1 )
        triu_indices = np.triu_indices( n=self.M, m=self.M, k=1 )
        corr[tril_indices] = corr[triu_indices]
        corr[self.M - 1, self.M - 1] = 1.0
