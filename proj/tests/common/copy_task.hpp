#pragma once

#include <cstdint>
#include <vector>

#include "seqprobe/training/trainer.hpp"

namespace seqprobe::testing {

/// Copy task at acceptance scale: 20 words, lengths 3-8, 2000 training and 200 held-out pairs.
struct CopyTask {
  training::Vocab vocab;
  std::vector<training::EncodedPair> train;
  std::vector<training::EncodedPair> held_out;

  static CopyTask make(std::uint64_t seed) {
    const training::PairCorpus all = training::make_copy_corpus(2200, 20, 3, 8, seed);
    training::PairCorpus train_part, held_part;
    train_part.pairs.assign(all.pairs.begin(), all.pairs.begin() + 2000);
    held_part.pairs.assign(all.pairs.begin() + 2000, all.pairs.end());
    CopyTask t;
    t.vocab = training::Vocab::build(train_part.sources(), 100);
    t.train = training::encode_corpus(train_part, t.vocab, t.vocab);
    t.held_out = training::encode_corpus(held_part, t.vocab, t.vocab);
    return t;
  }

  training::TrainConfig config(seq2seq::Attention attention, std::size_t epochs, std::uint64_t seed) const {
    training::TrainConfig c;
    c.model.src_vocab_size = vocab.size();
    c.model.tgt_vocab_size = vocab.size();
    c.model.d_emb = 32;
    c.model.d_h = 64;
    c.model.attention = attention;
    c.model.max_decode_len = 12;
    c.epochs = epochs;
    c.seed = seed;
    c.batch_size = 1;
    return c;
  }
};

}  // namespace seqprobe::testing
