// Writes the synthetic analytics fixture (graph.edges + posts.csv) into the
// directory given as argv[1].

#include <filesystem>
#include <fstream>
#include <iostream>

#include "fixture_util.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_fixture <out_dir>\n";
    return 2;
  }
  const std::filesystem::path dir = argv[1];
  std::filesystem::create_directories(dir);

  const fixture::SyntheticData data = fixture::make_synthetic();
  {
    std::ofstream out(dir / "graph.edges");
    toxsim::save_edge_list(data.graph, out);
  }
  {
    std::ofstream out(dir / "posts.csv");
    toxsim::save_posts_csv(out, data.posts);
  }
  std::cout << "fixture: " << data.graph.node_count() << " nodes, " << data.graph.edge_count()
            << " edges, " << data.posts.size() << " posts\n";
  return 0;
}
