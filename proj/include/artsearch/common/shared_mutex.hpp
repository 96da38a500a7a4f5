#pragma once

#include <pthread.h>

namespace artsearch {

/// Reader-writer lock that admits no new readers while a writer waits.
/// std::shared_mutex on glibc prefers readers, so a steady query load can
/// starve an ingestion commit indefinitely. Meets the SharedMutex
/// requirements, so std::unique_lock and std::shared_lock work with it.
class SharedMutex {
 public:
  SharedMutex();
  ~SharedMutex();
  SharedMutex(const SharedMutex&) = delete;
  SharedMutex& operator=(const SharedMutex&) = delete;

  void lock();
  bool try_lock();
  void unlock();
  void lock_shared();
  bool try_lock_shared();
  void unlock_shared();

 private:
  pthread_rwlock_t lock_;
};

}  // namespace artsearch
