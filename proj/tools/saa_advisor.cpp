// HTTP advisor service. Sessions live in memory for the lifetime of the
// process.
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "saac/advisor_http.hpp"

int main(int argc, char** argv) {
  CLI::App app{"SAA-c bidding advisor service"};
  std::string host = "127.0.0.1";
  int port = 8080;
  saac::AdvisorOptions options;
  app.add_option("--host", host, "bind address");
  app.add_option("-p,--port", port, "port")->check(CLI::Range(1, 65535));
  app.add_option("-w,--workers", options.workers, "background worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", options.seed, "service seed");
  app.add_option("--mc-samples", options.predictor.mc_samples, "predictor samples per iteration")
      ->check(CLI::PositiveNumber);
  app.add_option("--max-iters", options.predictor.max_iters, "predictor iteration cap")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  saac::AdvisorService service(options);
  httplib::Server server;
  saac::install_advisor_routes(server, service);
  std::printf("advisor listening on http://%s:%d\n", host.c_str(), port);
  std::fflush(stdout);
  if (!server.listen(host, port)) {
    std::fprintf(stderr, "cannot listen on %s:%d\n", host.c_str(), port);
    return 1;
  }
  return 0;
}
