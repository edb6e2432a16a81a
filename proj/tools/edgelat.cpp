#include "edgelat/cli.hpp"
#include "edgelat/http_fetch.hpp"

int main(int argc, char** argv) {
  edgelat::cli::Services svc;
  svc.fetch_page = [](const std::string& domain, std::chrono::milliseconds timeout) {
    edgelat::http::FetchOptions opt;
    opt.timeout = timeout;
    return edgelat::http::fetch_root(domain, opt);
  };
  return edgelat::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr, svc);
}
