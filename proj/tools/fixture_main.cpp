// Writes a synthetic pseudo-language corpus for end-to-end runs and demos.

#include <iostream>

#include "CLI11.hpp"
#include "xlbd/corpus.hpp"
#include "xlbd/fixture.hpp"

int main(int argc, char** argv) {
  CLI::App app{"generate a pseudo-language fixture corpus"};

  std::string out = "fixture.jsonl";
  std::size_t n = 4000;
  std::uint64_t seed = 7;
  std::string task = "classification";
  app.add_option("--out", out, "output dataset path");
  app.add_option("--n", n, "number of samples");
  app.add_option("--seed", seed, "generator seed");
  app.add_option("--task", task, "classification or rating");

  CLI11_PARSE(app, argc, argv);

  try {
    xlbd::fixture::FixtureSpec spec;
    spec.n_samples = n;
    spec.seed = seed;
    spec.task = xlbd::corpus::parse_task(task);
    xlbd::corpus::Dataset d = xlbd::fixture::make_corpus(spec);
    xlbd::corpus::save_records(d, out);
    std::cout << "wrote " << d.size() << " samples to " << out << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
