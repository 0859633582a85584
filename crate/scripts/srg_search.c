// Randomized row-by-row backtracking search for srg(25,12,5,6) adjacency
// matrices. Usage: srg_search COUNT SEED NODE_LIMIT; prints one 625-char
// 0/1 row-major matrix per line. Duplicates up to isomorphism are removed
// afterwards (see scripts/srg_dedupe.py).
#include <stdio.h>
#include <stdlib.h>
#include <stdint.h>
#define N 25
#define K 12
#define LAM 5
#define MU 6
typedef uint32_t u32;
u32 nb[N]; // neighbour bitmasks
int deg[N];
static unsigned long long rs=88172645463325252ULL;
static inline unsigned long long xr(){rs^=rs<<13;rs^=rs>>7;rs^=rs<<17;return rs;}
long nodes, limit;
int order[N];
int solve_row(int i);
// choose entries of row i for columns j in (i+1..N-1), position idx in list
int cols[N]; int ncols;
int cnt[N]; // common count with rows h<i so far
int rem_ones;
int rec(int i,int idx){
  if(++nodes>limit) return -1;
  if(rem_ones==0){
    // check constraints with all h<i
    for(int h=0;h<i;h++){int need=((nb[h]>>i)&1)?LAM:MU; if(__builtin_popcount(nb[h]&nb[i])!=need) return 0;}
    int r=solve_row(i+1); return r;
  }
  if(idx==ncols) return 0;
  if(ncols-idx<rem_ones) return 0;
  // pruning: for each h<i, current common + max possible
  int j=cols[idx];
  int first=xr()&1;
  for(int t=0;t<2;t++){
    int v=t^first;
    if(v){ if(deg[j]>=K) continue;
      // check adding j doesn't overshoot for any h
      int ok=1; u32 cur=nb[i]|(1u<<j);
      for(int h=0;h<i;h++){int need=((nb[h]>>i)&1)?LAM:MU; if(__builtin_popcount(nb[h]&cur)>need){ok=0;break;}}
      if(!ok) continue;
      nb[i]|=1u<<j; nb[j]|=1u<<i; deg[i]++; deg[j]++; rem_ones--;
      int r=rec(i,idx+1);
      if(r!=0) return r;
      nb[i]&=~(1u<<j); nb[j]&=~(1u<<i); deg[i]--; deg[j]--; rem_ones++;
    } else {
      // check feasibility: each h must still be able to reach need
      u32 avail=0; for(int k=idx+1;k<ncols;k++) if(deg[cols[k]]<K) avail|=1u<<cols[k];
      int ok=1;
      for(int h=0;h<i;h++){int need=((nb[h]>>i)&1)?LAM:MU; if(__builtin_popcount(nb[h]&nb[i])+__builtin_popcount(nb[h]&avail)<need){ok=0;break;}}
      if(!ok) continue;
      int r=rec(i,idx+1); if(r!=0) return r;
    }
  }
  return 0;
}
int solve_row(int i){
  if(i==N) return 1;
  int need=K-deg[i];
  if(need<0) return 0;
  // save
  int save_n=ncols; int savecols[N]; for(int k=0;k<ncols;k++) savecols[k]=cols[k];
  ncols=0; for(int j=i+1;j<N;j++) cols[ncols++]=j;
  for(int k=ncols-1;k>0;k--){int r=xr()%(k+1); int t=cols[k];cols[k]=cols[r];cols[r]=t;}
  int save_rem=rem_ones; rem_ones=need;
  if(ncols<need){ncols=save_n; rem_ones=save_rem; for(int k=0;k<ncols;k++) cols[k]=savecols[k]; return 0;}
  int r=rec(i,0);
  ncols=save_n; for(int k=0;k<ncols;k++) cols[k]=savecols[k]; rem_ones=save_rem;
  return r;
}
int main(int argc,char**argv){
  int want=atoi(argv[1]); rs^=atoll(argv[2])*0x9E3779B97F4A7C15ULL; limit=atoll(argv[3]);
  int found=0, tries=0;
  while(found<want){
    tries++;
    for(int i=0;i<N;i++){nb[i]=0;deg[i]=0;}
    // row 0: neighbours 1..12
    for(int j=1;j<=K;j++){nb[0]|=1u<<j;nb[j]|=1u;deg[0]++;deg[j]++;}
    nodes=0;
    int r=solve_row(1);
    if(r==1){found++; for(int i=0;i<N;i++)for(int j=0;j<N;j++)putchar('0'+((nb[i]>>j)&1)); putchar('\n'); fflush(stdout);}
  }
  fprintf(stderr,"tries %d\n",tries);
}
