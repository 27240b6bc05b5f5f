// dot-product: sum of a[i] * b[i], repeated; prints the result and the time.
#include <omp.h>

#include <cstdio>
#include <cstdlib>
#include <vector>

int main(int argc, char** argv) {
  const long n = argc > 1 ? std::atol(argv[1]) : 1000000;
  const int repeat = argc > 2 ? std::atoi(argv[2]) : 10;
  std::vector<double> a(n), b(n);
  for (long i = 0; i < n; ++i) {
    a[i] = 0.5 * (i % 100);
    b[i] = 0.25 * (i % 37);
  }

  double dot = 0.0;
  const double start = omp_get_wtime();
  for (int r = 0; r < repeat; ++r) {
    double sum = 0.0;
#pragma omp parallel for reduction(+ : sum) schedule(static)
    for (long i = 0; i < n; ++i) sum += a[i] * b[i];
    dot = sum;
  }
  const double stop = omp_get_wtime();

  std::printf("dot: %.3f\n", dot);
  std::printf("Total time: %.6f s\n", stop - start);
  return 0;
}
