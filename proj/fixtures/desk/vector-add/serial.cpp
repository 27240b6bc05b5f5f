// vector-add: c = a + b, repeated; prints a checksum and the kernel time.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <vector>

int main(int argc, char** argv) {
  const long n = argc > 1 ? std::atol(argv[1]) : 1000000;
  const int repeat = argc > 2 ? std::atoi(argv[2]) : 10;
  std::vector<double> a(n), b(n), c(n);
  for (long i = 0; i < n; ++i) {
    a[i] = 0.5 * (i % 100);
    b[i] = 0.25 * (i % 37);
  }

  const auto start = std::chrono::steady_clock::now();
  for (int r = 0; r < repeat; ++r) {
    for (long i = 0; i < n; ++i) c[i] = a[i] + b[i];
  }
  const auto stop = std::chrono::steady_clock::now();

  double checksum = 0.0;
  for (long i = 0; i < n; ++i) checksum += c[i];
  std::printf("checksum: %.6f\n", checksum);
  std::printf("Total time: %.6f s\n", std::chrono::duration<double>(stop - start).count());
  return 0;
}
