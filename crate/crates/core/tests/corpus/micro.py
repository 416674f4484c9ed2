import numpy as np
from numpy import ndarray


def recurrence(a: ndarray, n: int):
    for i in range(1, n):
        a[i] = a[i - 1]


def shift_left(a: ndarray, n: int):
    for i in range(0, n - 1):
        a[i] = a[i + 1]


def k_reduction(self, data: list, corr: list):
    for i in range(0, self.M - 1):
        corr[i][i] = 1.0
        for j in range(i + 1, self.M):
            corr[i][j] = 0.0
            for k in range(0, self.N):
                corr[i][j] += (data[k][i] * data[k][j])
            corr[j][i] = corr[i][j]
    corr[self.M - 1][self.M - 1] = 1.0


def transpose_copy(a: ndarray, b: ndarray, n: int, m: int):
    for i in range(0, n):
        for j in range(0, m):
            b[j, i] = a[i, j]


def transpose_inplace(a: ndarray, n: int):
    for i in range(0, n):
        for j in range(i + 1, n):
            a[j, i] = a[i, j]


def elementwise(a: ndarray, b: ndarray, c: ndarray, n: int):
    for i in range(0, n):
        c[i] = a[i] + b[i]


def producer_consumer(a: ndarray, b: ndarray, n: int):
    for i in range(0, n):
        a[i] = b[i] * 2.0
    for i in range(1, n):
        b[i] = a[i - 1] + 1.0


def matmul(a: ndarray, b: ndarray, c: ndarray, n: int):
    for i in range(0, n):
        for j in range(0, n):
            c[i, j] = 0.0
            for k in range(0, n):
                c[i, j] += a[i, k] * b[k, j]


def sweep(a: ndarray, n: int):
    for i in range(1, n):
        for j in range(1, n):
            a[i, j] = a[i - 1, j] + a[i, j - 1]


def total(a: ndarray, s: ndarray, n: int):
    for i in range(0, n):
        s[0] += a[i]


def guarded(a: ndarray, n: int):
    for i in range(0, n):
        if i >= 2:
            a[i] = a[i - 2] * 0.5
